# Copyright 2026 The Robometer Authors. All Rights Reserved.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
# ============================================================================

import json, numpy as np
from scipy import stats
rng = np.random.default_rng(2026)
cases = []
hand = [
  ([1,2,3],[4,5,6]),
  ([1,2,3,4],[1,2,3,4]),
  ([0.5,0.5,0.75,1.0],[0.25,0.5,0.5,0.75,0.75]),
  ([3,1,4,1,5,9],[2,6,5,3,5,8]),
  ([10,20,30,40,50,60],[1,3,2,5,4,6]),
]
for a,b in hand: cases.append((list(map(float,a)),list(map(float,b))))
while len(cases) < 24:
    na = int(rng.integers(3, 13)); nb = int(rng.integers(3, 13))
    kind = len(cases) % 3
    if kind == 0:
        a = rng.normal(0,1,na); b = rng.normal(0.8,1.5,nb)
    elif kind == 1:
        a = rng.integers(0,6,na)/5.0; b = rng.integers(0,6,nb)/5.0   # heavy ties
    else:
        a = np.round(rng.uniform(0,1,na),2); b = np.round(rng.uniform(0.2,1.2,nb),2)
    cases.append((a.tolist(), b.tolist()))
out = []
for a,b in cases:
    a = np.array(a); b = np.array(b)
    mw = stats.mannwhitneyu(a, b, alternative='two-sided', method='asymptotic', use_continuity=True)
    u1 = mw.statistic
    na, nb = len(a), len(b)
    sp = np.sqrt(((na-1)*a.var(ddof=1)+(nb-1)*b.var(ddof=1))/(na+nb-2))
    rec = {"a": a.tolist(), "b": b.tolist(), "mwu_u_a": float(u1), "mwu_p": float(mw.pvalue),
           "cohens_d": float((a.mean()-b.mean())/sp) if sp > 0 else None}
    n = min(na, nb)
    if n >= 3 and np.std(a[:n]) > 0 and np.std(b[:n]) > 0:
        rec["pearson"] = float(stats.pearsonr(a[:n], b[:n]).statistic)
        rec["spearman"] = float(stats.spearmanr(a[:n], b[:n]).statistic)
    out.append(rec)
json.dump({"source": "scipy " + __import__("scipy").__version__, "cases": out}, open("__import__("os").path.join(__import__("os").path.dirname(__file__), "stats_fixtures.json")","w"), indent=1)
print(len(out), sum("spearman" in r for r in out), sum(r["cohens_d"] is not None for r in out))
