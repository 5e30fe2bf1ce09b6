"""
Run reports: one CSV row per metric with fixed columns, plus a JSON document
carrying the full config, its hash, checker verdicts and violations.
"""

import csv
import hashlib
import json
from pathlib import Path
from typing import Any

from pydantic import BaseModel, Field
import structlog

from app.sim.structures import Violation


logger = structlog.get_logger()

CSV_COLUMNS = ('scenario', 'seed', 'backend', 'n', 'metric', 'value')


def config_hash(config: dict[str, Any]) -> str:
    canonical = json.dumps(config, sort_keys=True, separators=(',', ':'))
    return hashlib.sha256(canonical.encode()).hexdigest()


class RunReport(BaseModel):
    scenario: str
    seed: int
    backend: str
    n: int = 0
    config: dict[str, Any] = Field(default_factory=dict)
    metrics: dict[str, float | int | str] = Field(default_factory=dict)
    verdicts: dict[str, bool] = Field(
        default_factory=dict, description='Checker name to pass/fail'
    )
    violations: list[Violation] = Field(default_factory=list)

    @property
    def config_hash(self) -> str:
        return config_hash(self.config)

    @property
    def passed(self) -> bool:
        return not self.violations and all(self.verdicts.values())

    def verdicts_from(self, checkers: list[str], violations: list[Violation]) -> 'RunReport':
        failing = {v.checker for v in violations}
        names = dict.fromkeys([*checkers, *sorted(failing)])
        return self.model_copy(
            update={
                'verdicts': {name: name not in failing for name in names},
                'violations': violations,
            }
        )

    def rows(self) -> list[dict[str, Any]]:
        base = {
            'scenario': self.scenario,
            'seed': self.seed,
            'backend': self.backend,
            'n': self.n,
        }
        rows = [{**base, 'metric': name, 'value': value} for name, value in self.metrics.items()]
        rows += [
            {**base, 'metric': f'pass:{name}', 'value': int(ok)}
            for name, ok in self.verdicts.items()
        ]
        return rows

    def to_json_obj(self) -> dict[str, Any]:
        return {
            **self.model_dump(mode='json'),
            'config_hash': self.config_hash,
            'passed': self.passed,
        }


def write_reports(out_dir: Path, name: str, reports: list[RunReport]) -> tuple[Path, Path]:
    """Write <name>.csv and <name>.json under out_dir"""
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / f'{name}.csv'
    json_path = out_dir / f'{name}.json'

    with open(csv_path, 'w', newline='', encoding='utf-8') as csvfile:
        writer = csv.DictWriter(csvfile, fieldnames=CSV_COLUMNS)
        writer.writeheader()
        for report in reports:
            writer.writerows(report.rows())

    json_path.write_text(
        json.dumps([report.to_json_obj() for report in reports], indent=2, sort_keys=True)
        + '\n'
    )
    logger.info('Report written', csv=str(csv_path), json=str(json_path), runs=len(reports))
    return csv_path, json_path


def failure_list(reports: list[RunReport]) -> list[dict[str, Any]]:
    return [
        {'scenario': report.scenario, 'seed': report.seed, **violation.model_dump()}
        for report in reports
        for violation in report.violations
    ]
