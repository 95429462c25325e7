"""Report documents for detection runs: build, serialize, parse."""
import io
import json
from datetime import datetime, timezone
from typing import List, Literal, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict

from ..core.PriscaEngine import PriscaFit
from ..core.extensions.ArResidualizer import ArSpec
from ..core.summaries import ChangePointReport, credible_set, map_estimate, variance_profile
from ..helpers.config import ModelConfig


class InputDigest(BaseModel):
    model_config = ConfigDict(frozen=True)

    source: str
    length: int
    samples: int
    preprocessing: Tuple[str, ...] = ()
    index_offset: int = 0
    axis_note: str = "indices refer to the input axis"


class EffectSummary(BaseModel):
    model_config = ConfigDict(frozen=True)

    effect: int
    status: Literal["kept", "diffuse", "overlap"]
    estimate: int
    credible_set: Tuple[int, ...]
    total_mass: float
    max_alpha: float
    baseline: bool = False
    alpha: Optional[Tuple[float, ...]] = None


class Timing(BaseModel):
    model_config = ConfigDict(frozen=True)

    created_at: str
    elapsed_seconds: float


class ReportDocument(BaseModel):
    """
    Everything a detection run produced, in a serializable form.

    Field names are part of the JSON output contract.
    """
    model_config = ConfigDict(frozen=True)

    digest: InputDigest
    config: ModelConfig
    method: str
    L: int
    k_hat: int
    change_points: Tuple[int, ...]
    effects: Tuple[EffectSummary, ...]
    elbo_trace: Tuple[float, ...]
    converged: bool
    iterations: int
    auto_path: Tuple[int, ...] = ()
    capped: bool = False
    ar: Optional[ArSpec] = None
    variance_profile: Optional[Tuple[float, ...]] = None
    timing: Optional[Timing] = None

    def to_json(self) -> str:
        return self.model_dump_json(indent=2)

    @classmethod
    def from_json(cls, text: str) -> "ReportDocument":
        return cls.model_validate_json(text)

    def to_frame(self) -> pd.DataFrame:
        """
        One row per effect carrying every field of the JSON document.

        Nested fields are flattened with ``_`` (``config_a0``, ``ar_coefficients``),
        document-level fields are repeated on each row and sequences are
        space-joined.
        """
        effects = pd.json_normalize([e.model_dump(mode="json") for e in self.effects], sep="_")
        document = pd.json_normalize(self.model_dump(mode="json", exclude={"effects"}), sep="_")
        row = document.map(_joined).iloc[0]
        return effects.map(_joined).assign(**row.to_dict())


def _joined(value):
    if isinstance(value, (list, tuple)):
        return " ".join(str(v) for v in value)
    return value


def build_report(fit: PriscaFit,
                 report: ChangePointReport,
                 digest: InputDigest,
                 method: str,
                 emit_alpha: bool = False,
                 emit_variance: bool = False,
                 ar: Optional[ArSpec] = None,
                 elapsed: Optional[float] = None) -> ReportDocument:
    """
    Assemble a ReportDocument from a fit and its detections.

    Args:
        fit: PRISCA fit
        report: Detections built from fit
        digest: Description of the input and preprocessing
        method: Name of the fitting method
        emit_alpha: Include every alpha vector
        emit_variance: Include the posterior variance at every instant
        ar: Fitted AR specification, if the AR adapter ran
        elapsed: Wall time; None leaves timing out (deterministic output)
    """
    level = report.detections[0].credible_set.level if report.detections else fit.config.p
    kept = {d.effect: d for d in report.detections}
    overlapping = set(report.overlapping_effects)

    effects = []
    for l, post in enumerate(fit.effects, start=1):
        if l in kept:
            cs, status, baseline = kept[l].credible_set, "kept", kept[l].baseline
        else:
            cs = credible_set(post.alpha, level, effect=l)
            status, baseline = ("overlap" if l in overlapping else "diffuse"), False
        effects.append(EffectSummary(
            effect=l,
            status=status,
            estimate=map_estimate(post.alpha),
            credible_set=cs.indices,
            total_mass=cs.total_mass,
            max_alpha=cs.max_alpha,
            baseline=baseline,
            alpha=tuple(float(a) for a in post.alpha) if emit_alpha else None,
        ))

    timing = None
    if elapsed is not None:
        timing = Timing(created_at=datetime.now(timezone.utc).isoformat(), elapsed_seconds=elapsed)

    return ReportDocument(
        digest=digest,
        config=fit.config,
        method=method,
        L=fit.L,
        k_hat=report.k_hat,
        change_points=tuple(report.change_points),
        effects=tuple(effects),
        elbo_trace=tuple(float(v) for v in fit.elbo_trace),
        converged=fit.converged,
        iterations=fit.iterations,
        auto_path=fit.auto_path,
        capped=fit.capped,
        ar=ar,
        variance_profile=tuple(float(v) for v in variance_profile(fit)) if emit_variance else None,
        timing=timing,
    )


def plot_table(fit: PriscaFit, report: ChangePointReport, source: Optional[str] = None) -> pd.DataFrame:
    """
    Long table ``t,effect,alpha,in_credible_set`` for external plotting.

    in_credible_set is true only for instants in the credible set of a kept
    effect.
    """
    kept = {d.effect: set(d.credible_set.indices) for d in report.detections}
    T = fit.T
    frames = []
    for l, post in enumerate(fit.effects, start=1):
        t = np.arange(1, T + 1)
        members = kept.get(l, set())
        frames.append(pd.DataFrame({
            "t": t,
            "effect": l,
            "alpha": post.alpha,
            "in_credible_set": [int(i) in members for i in t],
        }))
    table = pd.concat(frames, ignore_index=True)
    if source is not None:
        table.insert(0, "source", source)
    return table


def serialize(documents: Sequence[ReportDocument], fmt: str) -> str:
    """
    Render reports as JSON or CSV text.

    A single document renders as a JSON object, several as a JSON array.
    """
    if fmt == "csv":
        buffer = io.StringIO()
        pd.concat([d.to_frame() for d in documents], ignore_index=True).to_csv(
            buffer, index=False, lineterminator="\n")
        return buffer.getvalue()
    if len(documents) == 1:
        return documents[0].to_json() + "\n"
    payload = [json.loads(d.to_json()) for d in documents]
    return json.dumps(payload, indent=2) + "\n"


def parse(text: str) -> List[ReportDocument]:
    """Inverse of serialize for JSON output."""
    payload = json.loads(text)
    if isinstance(payload, list):
        return [ReportDocument.model_validate(item) for item in payload]
    return [ReportDocument.model_validate(payload)]
