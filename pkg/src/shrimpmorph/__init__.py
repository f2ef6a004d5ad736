"""Shrimp morphometry from RGB-D images.

Human-AI fused view/rostrum discrimination, heatmap keypoint estimation on a
virtual skeleton, and per-variable pixel-to-centimeter regression, glued
together by an event-logged pipeline with a review HTTP API.
"""

__version__ = "0.1.0"
