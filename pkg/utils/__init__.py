"""
Expression language, reports and the property suite
"""
