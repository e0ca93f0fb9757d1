from .code import build_code, code_params
