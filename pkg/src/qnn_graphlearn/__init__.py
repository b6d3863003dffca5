"""
qnn-graphlearn - exact simulation and training of dissipative quantum neural
networks on graph-structured quantum data.

The library surface lives in the submodules (``linalg``, ``graph_data``,
``network``, ``losses``, ``updates``, ``training``, ``gradcheck``); the
``qnn-graphlearn`` console script is ``qnn_graphlearn.cli:main``.
"""

__all__ = ["__version__"]

# Keep version in sync with pyproject.toml
__version__ = "1.0.0"
