from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Tuple, TypeVar

Func = TypeVar("Func", bound=Callable[..., Any])

COMMAND_ATTR = "__minimacd_command__"
ARGUMENTS_ATTR = "__minimacd_arguments__"

Argument = Tuple[Tuple[str, ...], Dict[str, Any]]


@dataclass
class Command:
    name: str
    help: str
    callback: Callable[..., Any]
    arguments: List[Argument] = field(default_factory=list)


def command(name: str, help: str = "") -> Callable[[Func], Func]:
    """メソッドをサブコマンドとして登録します。"""
    def decorator(func: Func) -> Func:
        setattr(func, COMMAND_ATTR, (name, help or (func.__doc__ or "").strip()))
        return func

    return decorator


def argument(*flags: str, **kwargs: Any) -> Callable[[Func], Func]:
    """サブコマンドにargparseの引数を追加します。書いた順に追加されます。"""
    def decorator(func: Func) -> Func:
        arguments: List[Argument] = list(getattr(func, ARGUMENTS_ATTR, []))
        arguments.insert(0, (flags, kwargs))
        setattr(func, ARGUMENTS_ATTR, arguments)
        return func

    return decorator


class Cog:
    """サブコマンドをまとめるクラス"""

    def get_commands(self) -> List[Command]:
        commands = []
        for attr in dir(type(self)):
            func = getattr(type(self), attr)
            if not callable(func) or not hasattr(func, COMMAND_ATTR):
                continue
            name, help = getattr(func, COMMAND_ATTR)
            commands.append(Command(name, help, getattr(self, attr), list(getattr(func, ARGUMENTS_ATTR, []))))
        return commands
