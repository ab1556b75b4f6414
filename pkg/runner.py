from argparse import ArgumentParser, Namespace
from importlib import import_module
from pathlib import Path
from typing import List, NoReturn, Optional, Sequence, TextIO
import logging

from lib.commands import Cog
from lib.config import CONFIG_ENV, config_path, setup_logging
from lib.context import Context
from lib.errors import BadArgument, ConfigError, MiniMacdException
from lib.ensemble import MODES

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_DOMAIN = 2


class Parser(ArgumentParser):
    def error(self, message: str) -> NoReturn:
        raise BadArgument(message)


def common_parser() -> ArgumentParser:
    parser = ArgumentParser(add_help=False)
    parser.add_argument("--config", help=f"設定ファイル (省略時は環境変数 {CONFIG_ENV})")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--out", help="出力ディレクトリ")
    parser.add_argument("--trace", help="デコードの記録を書き出すJSONファイル")
    parser.add_argument("--workers", type=int)
    parser.add_argument("--strategy", help="戦略 (カンマ区切りで複数)")
    parser.add_argument("--alpha", type=float)
    parser.add_argument("--k", type=int)
    parser.add_argument("--delta", type=float)
    parser.add_argument("--vote-rule", choices=["top-rank", "threshold"])
    parser.add_argument("--ensemble-mode", choices=list(MODES))
    parser.add_argument("--verbose", "-v", action="store_true")
    return parser


class MiniMacd:
    """
    サブコマンドを持つコマンドラインの本体

    cogs/ の拡張を読み込み、引数を解析して該当するコマンドを実行します。
    """

    def __init__(self, stdout: Optional[TextIO] = None, stderr: Optional[TextIO] = None) -> None:
        self.parser = Parser(prog="minimacd", description="複数のアマチュアモデルを使う対比デコーディングの実験ツール")
        self.subparsers = self.parser.add_subparsers(dest="command_name")
        self.common = common_parser()
        self.cogs: List[Cog] = []
        self.stdout = stdout
        self.stderr = stderr

    def load_extension(self, name: str) -> None:
        module = import_module(name)
        module.setup(self)  # type: ignore

    def add_cog(self, cog: Cog) -> None:
        self.cogs.append(cog)
        for command in cog.get_commands():
            sub = self.subparsers.add_parser(command.name, parents=[self.common], help=command.help,
                                             description=command.help)
            for flags, kwargs in command.arguments:
                sub.add_argument(*flags, **kwargs)
            sub.set_defaults(callback=command.callback)

    def get_context(self, args: Namespace) -> Context:
        return Context(self, args, self.stdout, self.stderr)

    def on_command_error(self, context: Context, exception: Exception) -> int:
        if isinstance(exception, MiniMacdException):
            context.error(exception.code, exception.message())
            return EXIT_DOMAIN

        logger.error("unexpected error", exc_info=exception)
        context.error(type(exception).__name__, str(exception))
        return EXIT_INTERNAL

    def configure_logging(self, args: Namespace) -> None:
        path: Optional[Path] = None
        try:
            path = config_path(args.config)
        except ConfigError:
            pass
        setup_logging(path, args.verbose)

    def run(self, argv: Sequence[str]) -> int:
        """
        :param argv: プログラム名を除いたコマンドライン引数
        :return: 終了コード
        """
        try:
            args = self.parser.parse_args(list(argv))
            if getattr(args, "callback", None) is None:
                raise BadArgument("サブコマンドを指定してください。")
        except MiniMacdException as e:
            return self.on_command_error(self.get_context(Namespace()), e)

        self.configure_logging(args)
        ctx = self.get_context(args)
        try:
            args.callback(ctx)
        except Exception as e:
            return self.on_command_error(ctx, e)
        return EXIT_OK
