"""
Quantum Lyapunov observables for kicked systems on the 2-torus
"""

__version__ = "1.0.0"
__description__ = "Trace-based Lyapunov growth of Heisenberg observables for kicked torus systems"
