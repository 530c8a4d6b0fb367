"""ccobft: committee configuration optimization and simulation for
TEE-assisted parallel BFT."""

__version__ = "0.1.0"
