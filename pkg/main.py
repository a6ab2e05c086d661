import argparse
import json
import logging
import os
import sys
from pathlib import Path
from typing import List, Optional

# 添加当前目录到 Python 路径
sys.path.append(os.path.dirname(os.path.abspath(__file__)))

from dotenv import load_dotenv

from database.config import get_database_url
from services.errors import ConfigError
from services.records_manager import RecordsManager
from services.run_config import load_config
from services.run_engine import EXIT_CONFIG, EXIT_OK, RunEngine


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lindblad-hosc",
        description="阻尼受迫量子谐振子 Lindblad 方程: 解析解与数值对照"
    )
    parser.add_argument("config", nargs="?", default=None, help="key = value 格式的运行配置文件")
    parser.add_argument("--out", default=None, help="输出目录 (覆盖配置中的 output)")
    parser.add_argument("--quiet", action="store_true", help="只输出警告和错误")
    parser.add_argument("--record-db", default=None, help="运行记录库 URL (默认读取 LINDBLAD_DB_URL)")

    records = parser.add_argument_group("运行记录")
    records.add_argument("--list-runs", action="store_true", help="以 JSON 列出运行记录与统计")
    records.add_argument("--mode", default=None, help="--list-runs 只列出该模式")
    records.add_argument("--limit", type=int, default=100, help="--list-runs 最多列出的条数")
    records.add_argument("--export-runs", default=None, metavar="PATH", help="把全部运行记录导出为 JSON 文件")
    records.add_argument("--delete-run", type=int, default=None, metavar="ID", help="删除一条运行记录")
    return parser


def setup_logging(quiet: bool) -> None:
    level = os.getenv("LINDBLAD_LOG_LEVEL", "WARNING" if quiet else "INFO")
    logging.basicConfig(
        level=logging.WARNING if quiet else level.upper(),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s"
    )


def records_command(args: argparse.Namespace, records_manager: RecordsManager) -> int:
    """记录库的查询、导出与删除"""
    if args.delete_run is not None and not records_manager.delete_record(args.delete_run):
        print(f"运行记录不存在: ID {args.delete_run}", file=sys.stderr)
        return EXIT_CONFIG
    if args.export_runs:
        Path(args.export_runs).write_text(records_manager.export_records(), encoding="utf-8")
    if args.list_runs:
        records = records_manager.get_all_records(limit=args.limit, mode=args.mode)
        print(json.dumps({
            'statistics': records_manager.get_record_statistics(),
            'records': [records_manager.to_dict(record) for record in records]
        }, ensure_ascii=False, indent=2))
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    load_dotenv()
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging(args.quiet)
    logger = logging.getLogger("lindblad-hosc")

    # 设置了记录库才写入运行记录
    database_url = args.record_db or get_database_url()
    records_manager = RecordsManager(database_url) if database_url else None

    if args.list_runs or args.export_runs or args.delete_run is not None:
        if records_manager is None:
            print("未设置运行记录库 (--record-db 或 LINDBLAD_DB_URL)", file=sys.stderr)
            return EXIT_CONFIG
        return records_command(args, records_manager)
    if args.config is None:
        parser.error("需要运行配置文件")

    try:
        config = load_config(args.config)
    except ConfigError as e:
        logger.error(f"配置错误: {str(e)}")
        print(f"配置错误: {e}", file=sys.stderr)
        return EXIT_CONFIG

    result = RunEngine(records_manager).run(config, args.out)
    if not result['success']:
        print(result.get('error') or result.get('message'), file=sys.stderr)
    return result['exit_code']


if __name__ == "__main__":
    sys.exit(main())
