"""
-------------------------------------------------------------------------------
  *****   ******            *****   ******   *     *  *     *
 *     *  *     *          *     *  *     *  **   **  *     *
 *        *     *          *        *     *  * * * *  *     *
 *        ******   *****    *****   ******   *  *  *  *     *
 *        *     *                *  *        *     *   *   *
 *     *  *     *          *     *  *        *     *    * *
  *****   ******            *****   *        *     *     *
-------------------------------------------------------------------------------
 * cbspmv is a cache-friendly block sparse matrix-vector multiplication toolkit.
 *
 * This software is licensed under the GNU General Public License version 3 (GPL-3.0).
 * You may obtain a copy of the license at https://www.gnu.org/licenses/gpl-3.0.en.html
 */
"""

import argparse
import sys
from typing import Optional, Sequence

import yaml
from pydantic import ValidationError

from cbSpMV.cli.convert import add_convert_parser
from cbSpMV.cli.reports import add_report_parsers
from cbSpMV.cli.spmv import add_spmv_parser
from cbSpMV.cli.verify import add_verify_parser
from cbSpMV.models.errors import DimensionMismatchError
from cbSpMV.models.settings import PipelineConfig
from cbSpMV.services.pipeline_service import PipelineService
from cbSpMV.utils.generation import CBSPMV_HEADER
from cbSpMV.utils.io import IOUtils

EXIT_OK = 0
EXIT_DOMAIN_ERROR = 1
EXIT_USAGE_ERROR = 2


def add_pipeline_arguments(parser: argparse.ArgumentParser):
    group = parser.add_argument_group("pipeline")
    group.add_argument('--config', help='YAML file with pipeline settings')
    group.add_argument('--th0', type=float, help='super-sparse block fraction that triggers column aggregation')
    group.add_argument('--th1', type=int, help='blocks with fewer non-zeros are stored as COO')
    group.add_argument('--th2', type=int, help='blocks with more non-zeros are stored as DENSE')
    group.add_argument('--warps-per-tb', type=int, dest='warps_per_tb', help='warps per thread block')
    group.add_argument('--mode', choices=['sequential', 'parallel_tb'], help='SpMV execution mode')
    group.add_argument('--agg', choices=['auto', 'on', 'off'], dest='enable_agg', help='column aggregation')
    group.add_argument('--balance', action=argparse.BooleanOptionalAction, dest='enable_balance',
                       help='thread-block load balancing')
    group.add_argument('--threads', type=int, help='worker threads, 0 = hardware default')


def pipeline_config(args: argparse.Namespace) -> PipelineConfig:
    overrides = {name: getattr(args, name, None) for name in PipelineConfig.model_fields}
    return PipelineService.resolve_config(args.config, overrides)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='cbspmv', description='Cache-friendly block sparse matrix-vector multiplication toolkit')
    parser.add_argument('--quiet', action='store_true', help='only report errors on stderr')
    subparsers = parser.add_subparsers(dest='command', required=True)
    add_convert_parser(subparsers, add_pipeline_arguments)
    add_spmv_parser(subparsers, add_pipeline_arguments)
    add_verify_parser(subparsers, add_pipeline_arguments)
    add_report_parsers(subparsers, add_pipeline_arguments)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code in (0, None) else EXIT_USAGE_ERROR

    IOUtils.verbose = not args.quiet
    IOUtils.print(CBSPMV_HEADER)
    try:
        report = args.handler(args, pipeline_config(args))
    except KeyboardInterrupt:
        IOUtils.error("KeyboardInterrupt detected! Aborting")
        return EXIT_DOMAIN_ERROR
    except (ValidationError, yaml.YAMLError, DimensionMismatchError) as error:
        IOUtils.error(error)
        return EXIT_USAGE_ERROR
    except (ValueError, OSError) as error:
        IOUtils.error(error)
        return EXIT_DOMAIN_ERROR
    IOUtils.emit(report)
    # a failed verification is a domain error
    return EXIT_OK if getattr(report, "passed", True) else EXIT_DOMAIN_ERROR


if __name__ == '__main__':
    sys.exit(main())
