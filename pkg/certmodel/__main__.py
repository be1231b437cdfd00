#!/usr/bin/env python3
"""
CLI 入口点
可以通过 python -m certmodel 调用
"""
from certmodel.cli import cli

if __name__ == '__main__':
    cli(obj={})
