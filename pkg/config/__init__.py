"""
Session and runtime configuration
"""
