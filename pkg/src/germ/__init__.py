"""Risk-monotone learning on finite classes.

Greedy gated empirical risk minimization with provable risk-monotone gap
sequences, an exact-expectation oracle for small discrete problems, and a
seeded Monte Carlo harness for risk curves, bound coverage, and decay rates.
"""

__version__ = "0.1.0"
