from cbSpMV.models.reports import PipelineSummary
from cbSpMV.models.settings import PipelineConfig
from cbSpMV.services.pipeline_service import PipelineService


def convert(args, cfg: PipelineConfig) -> PipelineSummary:
    return PipelineService.convert(args.input, args.output, cfg)


def add_convert_parser(subparsers, add_pipeline_arguments):
    parser = subparsers.add_parser('convert', help='Pack a Matrix Market file into a CBSM container')
    parser.add_argument('input', help='input .mtx file')
    parser.add_argument('output', help='output .cbsm file')
    add_pipeline_arguments(parser)
    parser.set_defaults(handler=convert)
