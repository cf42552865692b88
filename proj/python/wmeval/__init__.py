"""Batch reward scoring for watermark-evaluation responses."""

from ._wmeval import batch_advantages, batch_reward

__all__ = ["batch_advantages", "batch_reward"]
