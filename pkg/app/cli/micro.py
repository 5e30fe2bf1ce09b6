"""
Wall-clock proving cost of one Update against the in-process backends, as a
function of clock size, number of merged clocks and quorum size.
"""

import time

import numpy as np
import structlog

from app.backends.deployment import DeploymentConfig, build_deployment
from app.backends.structures import BackendName
from app.cli.report import RunReport
from app.validators.structures import FrontendKind, Vlc


logger = structlog.get_logger()

DEFAULT_SIZES = (1, 4, 16, 64)
DEFAULT_MERGED = (0, 1, 4, 16)
DEFAULT_FAULTS = (1, 2, 3)


def _timed(fn, reps: int) -> list[float]:
    samples = []
    for _ in range(reps):
        started = time.perf_counter()
        fn()
        samples.append((time.perf_counter() - started) * 1000)
    return samples


def _report(
    scenario: str, backend: BackendName, n: int, samples: list[float], config: dict
) -> RunReport:
    p50, p99 = np.percentile(np.asarray(samples), [50, 99])
    return RunReport(
        scenario=scenario,
        seed=0,
        backend=backend.value,
        n=n,
        config=config,
        metrics={
            'prove_ms_p50': round(float(p50), 4),
            'prove_ms_p99': round(float(p99), 4),
            'reps': len(samples),
        },
    )


def bench_clock_size(backend: BackendName, size: int, reps: int) -> RunReport:
    """Update merging one clock that already has `size` entries"""
    names = tuple(f'E{i}' for i in range(size))
    deployment = build_deployment(
        DeploymentConfig(backend=backend, entities=('X', *names), seed='micro/size')
    )
    service = deployment.service
    big = Vlc.genesis()
    for name in names:
        big = service.update(deployment.signer(name), name, Vlc.genesis(), [big])
    samples = _timed(
        lambda: service.update(deployment.signer('X'), 'X', Vlc.genesis(), [big]), reps
    )
    service.close()
    return _report(
        f'micro-size-{size}', backend, size, samples, {'size': size, 'reps': reps}
    )


def bench_merged(backend: BackendName, merged: int, reps: int) -> RunReport:
    """Update merging `merged` independent single-entry clocks"""
    names = tuple(f'M{i}' for i in range(merged))
    deployment = build_deployment(
        DeploymentConfig(backend=backend, entities=('X', *names), seed='micro/merged')
    )
    service = deployment.service
    inputs = [
        service.update(deployment.signer(name), name, Vlc.genesis()) for name in names
    ]
    samples = _timed(
        lambda: service.update(deployment.signer('X'), 'X', Vlc.genesis(), inputs), reps
    )
    service.close()
    return _report(
        f'micro-merged-{merged}', backend, merged, samples, {'merged': merged, 'reps': reps}
    )


def bench_quorum(f: int, reps: int) -> RunReport:
    """Stateless Update against n = 3f + 1 validators"""
    n = 3 * f + 1
    deployment = build_deployment(
        DeploymentConfig(
            backend=BackendName.QUORUM,
            kinds=(FrontendKind.UPDATE,),
            entities=('X',),
            n=n,
            f=f,
            seed='micro/quorum',
        )
    )
    service = deployment.service
    samples = _timed(
        lambda: service.update(deployment.signer('X'), 'X', Vlc.genesis()), reps
    )
    service.close()
    return _report(
        f'micro-quorum-f{f}', BackendName.QUORUM, n, samples, {'f': f, 'reps': reps}
    )


def run_micro(
    backend: BackendName,
    reps: int = 20,
    sizes: tuple[int, ...] = DEFAULT_SIZES,
    merged: tuple[int, ...] = DEFAULT_MERGED,
    faults: tuple[int, ...] = DEFAULT_FAULTS,
) -> list[RunReport]:
    reports = [bench_clock_size(backend, size, reps) for size in sizes]
    reports += [bench_merged(backend, count, reps) for count in merged]
    reports += [bench_quorum(f, reps) for f in faults]
    logger.info('Micro benchmarks finished', backend=backend.value, runs=len(reports))
    return reports
