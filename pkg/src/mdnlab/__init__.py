"""World-model laboratory: VAE + mixture-density RNN on a synthetic dodge game,
with dream rollouts and mixture-component attribution statistics."""

__version__ = "0.1.0"
