from cbSpMV.models.reports import VerifyReport
from cbSpMV.models.settings import PipelineConfig
from cbSpMV.services.report_service import VERIFY_TOLERANCE, ReportService


def verify(args, cfg: PipelineConfig) -> VerifyReport:
    return ReportService.verify(args.matrix, cfg, args.x, args.tolerance)


def add_verify_parser(subparsers, add_pipeline_arguments):
    parser = subparsers.add_parser('verify', help='Check the CB kernels against the reference CSR product')
    parser.add_argument('matrix', help='.mtx file or .cbsm container')
    parser.add_argument('--x', help='extra vector file checked alongside the seeded random vectors')
    parser.add_argument('--tolerance', type=float, default=VERIFY_TOLERANCE,
                        help='largest accepted relative error')
    add_pipeline_arguments(parser)
    parser.set_defaults(handler=verify)
