"""
ceforge - exact Cartan-Eilenberg systems of P-graded differential groups
"""
