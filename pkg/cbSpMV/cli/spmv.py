import argparse

from cbSpMV.models.reports import SpMVTiming
from cbSpMV.models.settings import PipelineConfig
from cbSpMV.services.report_service import DEFAULT_ITERS, ReportService
from cbSpMV.utils.io import IOUtils


def positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return value


def spmv(args, cfg: PipelineConfig) -> SpMVTiming:
    x = None if args.ones else IOUtils.read_vector(args.x)
    _, timing = ReportService.spmv(args.matrix, x, cfg, args.iters, args.output)
    return timing


def add_spmv_parser(subparsers, add_pipeline_arguments):
    parser = subparsers.add_parser('spmv', help='Multiply a packed matrix by a vector and time the kernel')
    parser.add_argument('matrix', help='.cbsm container (a .mtx file is packed on the fly)')
    source = parser.add_mutually_exclusive_group(required=True)
    source.add_argument('--x', help='vector file, one value per line')
    source.add_argument('--ones', action='store_true', help='multiply by the all-ones vector')
    parser.add_argument('-o', '--output', required=True, help='file receiving y, one value per line')
    parser.add_argument('--iters', type=positive_int, default=DEFAULT_ITERS, help='timed repetitions')
    add_pipeline_arguments(parser)
    parser.set_defaults(handler=spmv)
