"""Pedestrian bounding-box forecasting from boxes, behavioral cues and ego odometry."""
__version__ = "0.1.0"
