"""Secret-shared pointers to private data, run over simulated MPC parties."""

__version__ = "0.1.0"
