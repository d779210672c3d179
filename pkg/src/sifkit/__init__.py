"""sifkit: stress intensity factors for curved cracks in plane elasticity.

Library layout:

- ``elasticity``   material constants and pointwise tensor algebra
- ``geometry``     chord-parameterized crack curves and tip-centered coordinates
- ``fields``       near-tip reference fields and the two auxiliary extensions
- ``variation``    radial cutoff and the two material-variation directions
- ``quadrature``   triangle/edge rules and the weakly singular edge rule
- ``meshing``      crack-conforming triangulations, file I/O, red refinement
- ``solver``       P1/P2 displacement FEM on cracked domains
- ``interaction``  discrete interaction integral and SIF extraction
- ``bench``        benchmark problems with known SIFs, convergence helpers
- ``cli``          the ``sifkit`` command line tool
"""

from .elasticity import Material
from .geometry import StraightCrack, ArcCrack, CubicCrack

__version__ = "0.1.0"

__all__ = [
    "Material",
    "StraightCrack",
    "ArcCrack",
    "CubicCrack",
    "__version__",
]
