from functools import wraps
from typing import Any, Callable, TypeVar, cast

from lib.context import Context
from lib.errors import ModelNotFound, NotEnoughPrompts
from lib.zoo import EXPERT_FILE, MANIFEST_FILE, read_documents

Func = TypeVar("Func", bound=Callable[..., Any])


def check(predicate: Callable[[Context], bool]) -> Callable[[Func], Func]:
    """
    コマンドの実行前にpredicateを呼ぶデコレータを作ります。

    :param predicate: 条件を満たさないときに例外を送出する関数
    :return: デコレータ
    """
    def decorator(func: Func) -> Func:
        @wraps(func)
        def wrapper(self: Any, ctx: Context, *args: Any, **kwargs: Any) -> Any:
            predicate(ctx)
            return func(self, ctx, *args, **kwargs)

        return cast(Func, wrapper)

    return decorator


def zoo_trained_only() -> Callable[[Func], Func]:
    """
    エキスパートとマニフェストが学習済みかのチェック

    :return: check
    """
    def predicate(ctx: Context) -> bool:
        zoo_dir = ctx.config.zoo_dir
        for name in (EXPERT_FILE, MANIFEST_FILE):
            if not (zoo_dir / name).is_file():
                raise ModelNotFound(f"{zoo_dir / name} (先に train を実行してください)")
        return True

    return check(predicate)


def prompts_at_least(count: int) -> Callable[[Func], Func]:
    """
    全てのプロンプトファイルにcount個以上の文書があるかのチェック

    :param count: 必要な数
    :return: check
    """
    def predicate(ctx: Context) -> bool:
        domains = ctx.config.domains
        if not domains:
            raise NotEnoughPrompts("[data] に prompts もしくは news/wiki/story を指定してください。")
        for name, path in domains.items():
            found = len(read_documents(path))
            if found < count:
                raise NotEnoughPrompts(f"{name}: {found}個 (必要: {count}個以上)")
        return True

    return check(predicate)
