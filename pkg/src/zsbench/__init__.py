"""zsbench: zero-shot LLM classification vs from-scratch ML baselines."""

__version__ = "0.1.0"
