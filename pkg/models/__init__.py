"""
Computational core: series, operators, dressing, hierarchy and Poisson brackets
"""
