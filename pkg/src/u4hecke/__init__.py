"""Exact-arithmetic workbench for a rank-4 unitary group over k((t)).

Everything is computed over the equal-characteristic local field
F = k_F((pi)) with k_F the quadratic extension of k_0 = GF(q), q odd.
No floating point is used anywhere: local-field elements are truncated
Laurent series over k_F, character values live in the cyclotomic
integers Z[zeta_p].
"""

__version__ = "0.1.0"
