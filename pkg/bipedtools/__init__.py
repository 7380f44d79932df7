"""BipedTools 是被动双足步行器 (两段腿, 重力驱动) 的数值分析工具: 步周期、Poincaré 映射、不动点族上的分岔条件验证与步行周期延拓"""

"""
Changelog

0.0.1: add: add switched-pendula vector fields and heelstrike jump maps
0.0.2: add: add event-located integration with grazing exclusion
0.0.3: add: add closed-form unperturbed solution, step-period roots, h(t) and f(t)
0.0.4: add: add Poincaré map with analytic derivatives at delta=0
0.0.5: add: add eigenstructure, necessary condition and projected slope report
0.0.6: add: add Newton continuation, Floquet fit and gait simulation
0.0.7: add: add typer CLI with JSON/CSV reports
0.0.8: fix: fix event polishing inside the bracket
0.0.9: add: add full-vs-expanded branch comparison
"""

__title__ = "BipedTools"
__version__ = "0.0.9"
__author__ = "BipedTools Developers"
