# Copyright (c) 2026 The mvoc authors
# SPDX-License-Identifier: Apache-2.0
"""Layered video object composition with diffusion guidance.

Videos are float64 arrays shaped (frames, channels, height, width); masks are
(frames, height, width); flows are (pairs, 2, height, width) holding (dy, dx).
"""

from ._mvoc import *  # noqa: F401,F403
from ._mvoc import MvocError, __doc__  # noqa: F401
