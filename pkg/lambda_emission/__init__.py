"""
Lambda Emission
Spontaneous-emission spectra of a three-level Λ atom whose lower states are
coupled by a quantized driving field.
"""

__version__ = "0.1.0"
