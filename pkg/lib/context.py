from argparse import Namespace
from pathlib import Path
from typing import TYPE_CHECKING, Optional, TextIO, Union
import json
import logging
import sys

from lib.config import ExperimentConfig, load_config, with_overrides
from lib.errors import IoError

if TYPE_CHECKING:
    from runner import MiniMacd

logger = logging.getLogger(__name__)


class Context:
    """
    1回のコマンド実行の文脈

    標準出力にはデータだけを書き、エラーは標準エラー出力にJSONで1行書きます。
    """

    def __init__(self,
                 runner: "MiniMacd",
                 args: Namespace,
                 stdout: Optional[TextIO] = None,
                 stderr: Optional[TextIO] = None) -> None:
        self.runner = runner
        self.args = args
        self.stdout = stdout or sys.stdout
        self.stderr = stderr or sys.stderr
        self._config: Optional[ExperimentConfig] = None

    @property
    def config(self) -> ExperimentConfig:
        """--configの設定にCLIのフラグを上書きしたもの"""
        if self._config is None:
            args = self.args
            self._config = with_overrides(
                load_config(args.config),
                out=args.out,
                seed=args.seed,
                workers=args.workers,
                strategies=args.strategy,
                alpha=args.alpha,
                k=args.k,
                delta=args.delta,
                vote_rule=args.vote_rule,
                ensemble_mode=args.ensemble_mode
            )
        return self._config

    def send(self, content: str) -> None:
        self.stdout.write(content.rstrip("\n") + "\n")
        self.stdout.flush()

    def error(self, code: str, message: str) -> None:
        """
        エラー表示のための関数

        :param code: エラーの種類
        :param message: エラーの詳細
        """
        self.stderr.write(json.dumps({"error": code, "message": message}, ensure_ascii=False) + "\n")
        self.stderr.flush()

    def success(self, content: str, description: Optional[str] = None) -> None:
        if description is None:
            logger.info("\U00002705 %s", content)
        else:
            logger.info("\U00002705 %s: %s", content, description)

    def write(self, path: Union[str, Path], text: str) -> Path:
        """
        ファイルに書き出します。親ディレクトリがなければ作ります。

        :param path: 書き出し先
        :param text: 内容
        :return: 書き出したパス
        """
        path = Path(path)
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            with open(path, "w", encoding="utf-8", newline="\n") as f:
                f.write(text)
        except OSError as e:
            raise IoError(f"{path}: {e}")
        return path
