"""
Bid predictor models: native gradient boosting, the BaseModel contract and tuning
"""
