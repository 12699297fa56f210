"""
Pipeline - run the data-preparation stages in sequence.

raw events -> parse -> filter -> minutes -> rolling windows -> observations

Each stage feeds the next; the chain keeps every intermediate result so the
command line can report what was dropped where.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import BinaryIO, Optional, Union

from stochcap.aggregate import aggregate_minutes, rolling_intervals
from stochcap.classify import ClassificationReport, classify_detailed
from stochcap.ingest import EventFormat, ParseResult, RejectionSummary, filter_events, parse_events
from stochcap.models import ClassifierConfig, FilterConfig, MinuteInterval


logger = logging.getLogger(__name__)


@dataclass
class PipelineResult:
    """Intermediate products of one chain run"""
    parsed: ParseResult
    rejections: RejectionSummary
    minutes: list[MinuteInterval]
    report: Optional[ClassificationReport] = None

    def summary(self) -> dict:
        """Processing summary: rejections per reason, events, discards."""
        doc = {
            "records": {
                "parsed": len(self.parsed.records),
                "malformed": self.parsed.malformed,
                "malformed_lines": self.parsed.malformed_lines,
            },
            "rejections": self.rejections.model_dump(),
            "minutes": len(self.minutes),
        }
        if self.report is not None:
            obs = self.report.observations
            doc["observations"] = {
                "total": len(obs),
                "breakdowns": obs.n_breakdowns,
                "censored": obs.n_censored,
            }
            doc["events"] = {
                "accepted": len(self.report.accepted_events),
                "rejected": len(self.report.events) - len(self.report.accepted_events),
                "rejection_reasons": [e.reason for e in self.report.events if not e.accepted],
            }
            doc["discards"] = self.report.discards
        return doc


class ProcessingChain:
    """Execute ingest -> filter -> aggregate -> classify, output of one stage feeding the next"""

    def __init__(
        self,
        fmt: Optional[EventFormat] = None,
        filter_config: Optional[FilterConfig] = None,
        classifier_config: Optional[ClassifierConfig] = None,
    ):
        self.fmt = fmt or EventFormat()
        self.filter_config = filter_config or FilterConfig()
        self.classifier_config = classifier_config or ClassifierConfig()

    def to_minutes(self, source: Union[BinaryIO, bytes, str, Path]) -> PipelineResult:
        logger.info("[CHAIN] Stage 1/3: parse")
        parsed = parse_events(source, self.fmt)
        logger.info("[CHAIN] Stage 2/3: filter")
        records, rejections = filter_events(parsed.records, self.filter_config)
        logger.info("[CHAIN] Stage 3/3: aggregate")
        minutes = aggregate_minutes(records)
        return PipelineResult(parsed=parsed, rejections=rejections, minutes=minutes)

    def run(self, source: Union[BinaryIO, bytes, str, Path]) -> PipelineResult:
        result = self.to_minutes(source)
        cfg = self.classifier_config
        logger.info("[CHAIN] Classifying")
        result.report = classify_detailed(
            result.minutes,
            rolling_intervals(result.minutes, cfg.window_minutes),
            rolling_intervals(result.minutes, cfg.recovery_window),
            cfg,
        )
        return result
