from cbSpMV.cli.spmv import positive_int
from cbSpMV.models.reports import BalanceReport, BenchReport, CacheSimReport, StatsReport
from cbSpMV.models.settings import CACHE_LEVELS, CacheConfig, PipelineConfig
from cbSpMV.services.report_service import ReportService


def stats(args, cfg: PipelineConfig) -> StatsReport:
    return ReportService.stats(args.matrix, cfg)


def balance_report(args, cfg: PipelineConfig) -> BalanceReport:
    return ReportService.balance_report(args.matrix, cfg)


def cache_sim(args, cfg: PipelineConfig) -> CacheSimReport:
    base = CACHE_LEVELS[args.level]
    cache = CacheConfig(
        capacity_bytes=args.capacity or base.capacity_bytes,
        line_bytes=args.line or base.line_bytes,
        associativity=args.assoc or base.associativity,
    )
    return ReportService.cache_report(args.matrix, cache, cfg)


def bench(args, cfg: PipelineConfig) -> BenchReport:
    return ReportService.bench(args.matrix, cfg, args.iters, args.csv)


def add_report_parsers(subparsers, add_pipeline_arguments):
    parser = subparsers.add_parser('stats', help='Block statistics and storage estimates')
    parser.add_argument('matrix', help='.mtx file or .cbsm container')
    add_pipeline_arguments(parser)
    parser.set_defaults(handler=stats)

    parser = subparsers.add_parser('balance-report', help='Per-thread-block loads before and after balancing')
    parser.add_argument('matrix', help='.mtx file or .cbsm container')
    add_pipeline_arguments(parser)
    parser.set_defaults(handler=balance_report)

    parser = subparsers.add_parser('cache-sim', help='Replay CSR and CB access traces through an LRU cache')
    parser.add_argument('matrix', help='.mtx file or .cbsm container')
    parser.add_argument('--level', choices=sorted(CACHE_LEVELS), default='small', help='cache preset')
    parser.add_argument('--capacity', type=int, help='cache capacity in bytes')
    parser.add_argument('--line', type=int, help='line size in bytes')
    parser.add_argument('--assoc', type=int, help='associativity')
    add_pipeline_arguments(parser)
    parser.set_defaults(handler=cache_sim)

    parser = subparsers.add_parser('bench', help='Time every aggregation and balance variant')
    parser.add_argument('matrix', help='.mtx file or .cbsm container')
    parser.add_argument('--iters', type=positive_int, default=10, help='timed repetitions per variant')
    parser.add_argument('--csv', help='also write the table as CSV')
    add_pipeline_arguments(parser)
    parser.set_defaults(handler=bench)
