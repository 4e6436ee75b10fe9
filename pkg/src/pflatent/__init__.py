"""Phase-field trajectories, two-stage latent reduction and recurrent forecasting."""

__version__ = "0.1.0"
