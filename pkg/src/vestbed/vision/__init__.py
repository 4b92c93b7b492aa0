"""Image understanding: preprocessing chain and the hand-sign CNN."""

from . import cnn, image_io, kernels, preprocess  # noqa: F401
