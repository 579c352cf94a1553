"""
Revenue evaluation of signaling policies and residual diagnostics
"""
