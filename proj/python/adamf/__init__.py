"""Python access to the multimodal KG completion core."""

from ._core import gradcheck, metrics, resolved_config, run_cli, toy_config, write_toy_kg

__all__ = ["gradcheck", "metrics", "resolved_config", "run_cli", "toy_config", "write_toy_kg"]
