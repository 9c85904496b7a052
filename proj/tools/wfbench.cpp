#include <CLI11.hpp>

#include <chrono>
#include <iostream>
#include <random>

#include "wfc/oracle.hpp"

using namespace wfc;

namespace {

// Random closed message trees over a small atom pool. Every key is handed to
// the intruder so the closure decomposes the whole universe and the
// composition scan has real work to do.
struct Workload {
  KeyTable keys;
  Knowledge given;
};

Workload make_workload(int seeds, int tree_depth, unsigned seed) {
  Workload w;
  std::mt19937 rng(seed);
  std::vector<TermPtr> key_pool, leaf_pool;
  for (int i = 0; i < 8; ++i) {
    std::string name = "k" + std::to_string(i);
    w.keys.declare_symmetric(name);
    key_pool.push_back(Term::make(Atom{name, Sort::key, false, {}, {}}));
  }
  for (int i = 0; i < 48; ++i)
    leaf_pool.push_back(Term::make(Atom{"n" + std::to_string(i), Sort::nonce, false, {}, {}}));
  for (int i = 0; i < 4; ++i)
    leaf_pool.push_back(Term::make(Atom{"P" + std::to_string(i), Sort::principal, false, {}, {}}));

  auto pick = [&rng](const std::vector<TermPtr>& pool) {
    return pool[std::uniform_int_distribution<std::size_t>(0, pool.size() - 1)(rng)];
  };
  std::function<TermPtr(int)> tree = [&](int depth) -> TermPtr {
    if (depth == 0) return pick(leaf_pool);
    if (std::uniform_int_distribution<int>(0, 2)(rng) == 0)
      return Term::enc(tree(depth - 1), pick(key_pool));
    return Term::pair(tree(depth - 1), tree(depth - 1));
  };

  for (const TermPtr& k : key_pool) w.given.add(k);
  for (int i = 0; i < seeds; ++i) w.given.add(tree(tree_depth));
  return w;
}

template <typename F>
std::pair<Knowledge, double> timed(F&& f) {
  auto t0 = std::chrono::steady_clock::now();
  Knowledge k = f();
  auto t1 = std::chrono::steady_clock::now();
  return {std::move(k), std::chrono::duration<double, std::milli>(t1 - t0).count()};
}

bool identical(const Knowledge& a, const Knowledge& b) {
  if (a.terms.size() != b.terms.size()) return false;
  auto it = b.terms.begin();
  for (const auto& [t, d] : a.terms) {
    if (!equal(t, it->first) || d.rule != it->second.rule || d.round != it->second.round ||
        compare(d.first, it->second.first) != 0 || compare(d.second, it->second.second) != 0)
      return false;
    ++it;
  }
  return true;
}

}  // namespace

int main(int argc, char** argv) {
  int seeds = 24, tree_depth = 6, rounds = 8, reps = 3;
  unsigned seed = 7;
  std::size_t cap = 2000000;

  CLI::App app{"Compare the serial and parallel knowledge-closure kernels"};
  app.add_option("--seeds", seeds, "seed messages");
  app.add_option("--tree-depth", tree_depth, "depth of each seed message");
  app.add_option("--rounds", rounds, "closure rounds");
  app.add_option("--reps", reps, "repetitions, best time wins");
  app.add_option("--seed", seed, "workload RNG seed");
  CLI11_PARSE(app, argc, argv);

  Workload w = make_workload(seeds, tree_depth, seed);
  std::cout << "workload: " << w.given.terms.size() << " given terms, " << rounds << " rounds\n";

  double serial_ms = 1e300, parallel_ms = 1e300;
  Knowledge serial_out, parallel_out;
  for (int r = 0; r < reps; ++r) {
    auto [s, st] = timed([&] { return closure_serial(w.given, w.keys, rounds, cap); });
    auto [p, pt] = timed([&] { return closure_parallel(w.given, w.keys, rounds, cap); });
    serial_ms = std::min(serial_ms, st);
    parallel_ms = std::min(parallel_ms, pt);
    serial_out = std::move(s);
    parallel_out = std::move(p);
  }

  std::cout << "closure size: " << serial_out.terms.size() << " terms\n";
  std::printf("serial:   %8.1f ms\n", serial_ms);
  std::printf("parallel: %8.1f ms\n", parallel_ms);
  std::printf("speedup:  %8.2fx\n", serial_ms / parallel_ms);

  if (!identical(serial_out, parallel_out)) {
    std::cout << "MISMATCH: serial and parallel closures differ\n";
    return 1;
  }
  std::cout << "results identical\n";
  return 0;
}
