"""mflab: mean-field, Vlasov and semiclassical limit experiments."""

__version__ = "0.1.0"
