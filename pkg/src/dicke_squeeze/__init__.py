"""Spin squeezing transferred from a squeezed phonon mode in an effective Dicke model."""

from .model import DerivedParams, SystemParams, derive_params

__all__ = ["SystemParams", "DerivedParams", "derive_params"]
__version__ = "0.1.0"
