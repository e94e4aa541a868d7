# main.py - 命令行入口（等价于 python -m stencilnet）
import sys

from stencilnet.cli import main

if __name__ == "__main__":
    sys.exit(main())
