"""Testing, self-correction and extension of polynomial-like functions on
subsets and subvarieties of F_q^n, with brute-force oracles."""

__version__ = "0.1.0"
