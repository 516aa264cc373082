#!/usr/bin/env python3
"""
manifold_id 测试运行器

统一的测试运行脚本，支持按模块运行测试。

使用方法：
    python tests/run_tests.py                    # 运行所有测试
    python tests/run_tests.py --sampling         # 只运行采样测试
    python tests/run_tests.py --estimators       # 只运行估计器测试（含 FisherS）
    python tests/run_tests.py --cli              # 只运行命令行与实验测试
    python tests/run_tests.py --acceptance       # 运行验收测试（耗时较长）
"""

import sys
import os
import argparse
import unittest

# 添加项目根目录到 Python 路径
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

SUITES = {
    "sampling": ("🌍 采样", ["test_sampling"]),
    "encoders": ("🧮 编码器", ["test_encoders"]),
    "neighbors": ("📍 近邻", ["test_neighbors"]),
    "estimators": ("📐 估计器", ["test_estimators", "test_fishers"]),
    "utils": ("🔧 工具与配置", ["test_utils"]),
    "cli": ("💻 命令行与实验", ["test_experiments"]),
}


def run_suite(title: str, modules, verbosity: int = 2) -> bool:
    """运行一组测试模块"""
    print("\n" + "="*60)
    print(f"{title}测试")
    print("="*60)

    try:
        suite = unittest.TestLoader().loadTestsFromNames(modules)
        result = unittest.TextTestRunner(verbosity=verbosity).run(suite)
        return result.wasSuccessful()
    except Exception as e:
        print(f"❌ {title}测试加载失败: {e}")
        return False


def run_acceptance(verbosity: int = 2) -> bool:
    """运行验收测试"""
    os.environ["MANIFOLD_ID_SLOW_TESTS"] = "1"
    return run_suite("🏁 验收", ["test_acceptance"], verbosity)


def run_all_tests(verbosity: int = 2) -> bool:
    """运行所有测试"""
    print("🚀 开始运行所有测试...")

    results = [(title, run_suite(title, modules, verbosity)) for title, modules in SUITES.values()]

    # 汇总结果
    print("\n" + "="*60)
    print("📊 测试结果汇总")
    print("="*60)

    passed = 0
    for test_name, success in results:
        status = "✅ 通过" if success else "❌ 失败"
        print(f"  {test_name}: {status}")
        if success:
            passed += 1

    print(f"\n总体结果: {passed}/{len(results)} 通过")

    if passed == len(results):
        print("🎉 所有测试都通过了！")
        return True
    else:
        print("⚠️ 部分测试失败，请检查上面的错误信息")
        return False


def main():
    """主函数"""
    parser = argparse.ArgumentParser(description="manifold_id 测试运行器")
    for name, (title, _) in SUITES.items():
        parser.add_argument(f"--{name}", action="store_true", help=f"只运行{title[2:]}测试")
    parser.add_argument("--acceptance", action="store_true", help="运行验收测试（n = 10⁵，耗时较长）")
    parser.add_argument("--quiet", "-q", action="store_true", help="简洁输出")

    args = parser.parse_args()
    verbosity = 1 if args.quiet else 2

    # 设置工作目录为 tests 目录
    os.chdir(os.path.dirname(os.path.abspath(__file__)))
    sys.path.insert(0, os.getcwd())

    selected = [name for name in SUITES if getattr(args, name)]
    if args.acceptance:
        success = run_acceptance(verbosity)
    elif selected:
        success = all([run_suite(*SUITES[name], verbosity) for name in selected])
    else:
        success = run_all_tests(verbosity)

    sys.exit(0 if success else 1)


if __name__ == "__main__":
    main()
