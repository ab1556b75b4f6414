class MiniMacdException(Exception):
    def message(self) -> str:
        raise NotImplementedError

    @property
    def code(self) -> str:
        return type(self).__name__


class DetailedException(MiniMacdException):
    """詳細をひとつ持つ例外"""
    template = "{0}"

    def __init__(self, detail: object = "") -> None:
        super(DetailedException, self).__init__(detail)
        self.detail = detail

    def message(self) -> str:
        return self.template.format(self.detail)


class EmptyCorpus(MiniMacdException):
    def message(self) -> str:
        return "コーパスにトークンがありません。"


class CorpusTooSmall(DetailedException):
    template = "コーパスが小さすぎます。{0}"


class InvalidOrder(DetailedException):
    template = "n-gramの次数は1以上にしてください。(指定: {0})"


class VocabMismatch(DetailedException):
    template = "語彙が一致しません。{0}"


class NonPositiveTemperature(DetailedException):
    template = "温度は正の値にしてください。(指定: {0})"


class MissingFullDistributions(MiniMacdException):
    def message(self) -> str:
        return "TopRankの投票には各アマチュアの全語彙分布が必要です。"


class InvalidK(DetailedException):
    template = "kは1以上にしてください。(指定: {0})"


class NegativeDelta(DetailedException):
    template = "deltaは0以上にしてください。(指定: {0})"


class CrOutOfRange(DetailedException):
    template = "合意率は0以上1以下です。(指定: {0})"


class EmptyCandidateSet(MiniMacdException):
    def message(self) -> str:
        return "候補トークンが空になりました。"


class InvalidParameter(DetailedException):
    template = "パラメータが不正です。{0}"


class ModelNotFound(DetailedException):
    template = "モデルファイルが見つかりません。{0}"


class InsufficientAmateurs(DetailedException):
    template = "アマチュアモデルが足りません。{0}"


class IoError(DetailedException):
    template = "ファイルの読み書きに失敗しました。{0}"


class ConfigError(DetailedException):
    template = "設定ファイルが不正です。{0}"


class NotEnoughPrompts(DetailedException):
    template = "プロンプトが足りません。{0}"


class BadArgument(DetailedException):
    template = "引数の解析に失敗しました。{0}"
