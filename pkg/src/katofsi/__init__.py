"""Inviscid-limit lab for a rigid body moving in a 2D viscous fluid.

Modules: ``grid`` and ``body`` (discrete substrate), ``forms`` (weak
formulation and identities), ``solver`` (body-frame NS), ``euler``
(inviscid reference), ``corrector`` (boundary-layer fake layer),
``diagnostics`` (Kato-type quantities), ``config``/``io``/``sweep``/``cli``.
"""
from .body import BodyGeometry, BodyState
from .grid import Grid, ScalarField, StripSpec, TensorField, VectorField

__all__ = ["BodyGeometry", "BodyState", "Grid", "ScalarField", "StripSpec", "TensorField", "VectorField"]
__version__ = "0.1.0"
