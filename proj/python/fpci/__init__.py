# Copyright 2026 The fpci Authors. All Rights Reserved.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
# =============================================================================

"""Fixed-point iterations with compressed iterates.

Thin wrapper over the compiled ``_fpci`` module: JSON payloads are decoded
into dictionaries and configs can be given as YAML text or a path.
"""

from __future__ import annotations

import json
import os
from typing import Any

from ._fpci import (  # noqa: F401
    BoundReport,
    ConfigError,
    DimensionError,
    DivergenceError,
    Error,
    FormatError,
    IdentityCompressor,
    NaturalCompression,
    NonFiniteError,
    RandK,
    RngStream,
    RunConfig,
    StandardDithering,
    compress,
    compressor_omega,
    describe,
    geometric_bound,
    load_config,
    message_bits,
    parse_config,
    plain_bound,
    serialize_config,
    vr_bound,
    vr_stepsizes,
)
from . import _fpci

__all__ = [name for name in dir() if not name.startswith("_")] + ["config", "run", "theory", "verify"]


def config(source: str | os.PathLike | RunConfig) -> RunConfig:
    """Accept a RunConfig, a path to a YAML file, or YAML text."""
    if isinstance(source, RunConfig):
        return source
    if isinstance(source, os.PathLike) or (isinstance(source, str) and os.path.isfile(source)):
        return load_config(os.fspath(source))
    return parse_config(source)


def run(source, write_files: bool = False) -> dict[str, Any]:
    """Run every seed; returns the summary with per-seed rows attached."""
    summary_json, seeds = _fpci.run_experiment(config(source), write_files)
    summary = json.loads(summary_json)
    summary["runs"] = seeds
    return summary


def theory(source) -> dict[str, Any]:
    """Certificate, stepsizes and bound without iterating."""
    return json.loads(_fpci.theory_report_json(config(source)))


def verify(source, draws: int = 20000) -> tuple[bool, list[dict[str, Any]]]:
    """Monte-Carlo checks of the compressor and map assumptions."""
    return _fpci.verify(config(source), draws)
