class FairLoraError(Exception):
    """Базовая ошибка движка: detail + код выхода CLI"""
    exit_code: int = 2

    def __init__(self, detail: str):
        self.detail = detail
        super().__init__(detail)


class UsageError(FairLoraError):
    """Неверная конфигурация или аргументы запуска"""
    exit_code = 1


class ConfigError(UsageError):
    def __init__(self, detail: str, line: int | None = None):
        self.line = line
        if line is not None:
            detail = f"строка {line}: {detail}"
        super().__init__(detail)


class DataError(FairLoraError):
    """Некорректные данные: CSV, спецификации, пустые подвыборки"""
    exit_code = 2


class ShapeError(DataError, ValueError):
    pass


class UndefinedRateError(DataError):
    """В группе нет ни одного положительного примера, TPR не определён"""


class NumericalError(FairLoraError):
    """NaN/Inf, расхождение обучения, не-PSD матрицы"""
    exit_code = 3


class NotPsdError(NumericalError):
    pass


class DivergenceError(NumericalError):
    """Потеря стала NaN/Inf во время обучения; в trace последние записи трассы"""

    def __init__(self, detail: str, trace: list | None = None):
        self.trace = trace or []
        super().__init__(detail)
