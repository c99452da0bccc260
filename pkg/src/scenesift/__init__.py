"""scenesift: surface the most anomalous scenes of a behavioral recording for human review.

The pipeline ingests pre-extracted multimodal per-frame features, tracks a
slowly adapting online Gaussian mixture over them, scores fixed-duration
windows by how unlikely their frames are under the model fitted to the past,
attributes each window's score to the behavioral modalities, and packages the
top-K windows as reviewable scenes.
"""

__version__ = "0.1.0"

from .errors import ScenesiftError

__all__ = ["ScenesiftError", "__version__"]
