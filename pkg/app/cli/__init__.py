from app.cli.main import build_parser, main
from app.cli.report import RunReport, config_hash, write_reports


__all__ = ['RunReport', 'build_parser', 'config_hash', 'main', 'write_reports']
