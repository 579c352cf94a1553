"""
Record validation, feature encoding and grouped splits
"""
