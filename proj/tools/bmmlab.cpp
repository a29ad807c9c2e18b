/*!
  \file bmmlab.cpp
  \brief Command-line laboratory: instance generation, witness-emitting
         algorithm runs, structural audits, benchmark grids and witness
         verification.

  Exit codes: 0 success, 1 validation or proved-lemma failure, 2 usage or
  input errors.  BMMLAB_THREADS caps internal worker count.
*/

#include <bmmlab/apfree.hpp>
#include <bmmlab/audit.hpp>
#include <bmmlab/bench.hpp>
#include <bmmlab/circuit.hpp>
#include <bmmlab/emitters.hpp>
#include <bmmlab/instance.hpp>
#include <bmmlab/rt_graph.hpp>

#include <CLI11.hpp>

#include <chrono>
#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

namespace
{

constexpr int kOk = 0;
constexpr int kCheckFailed = 1;
constexpr int kUsage = 2;

int cmd_gen( const std::string& kind, uint32_t m, const std::string& method, double prob,
             uint32_t n_a, uint32_t n_b, uint32_t n_c, double p_density, double q_density,
             uint64_t seed, const std::string& out )
{
  bmmlab::TripartiteInstance inst;
  if ( kind == "rs" )
  {
    if ( m < 1 )
    {
      std::cerr << "gen: --m is required for --kind rs\n";
      return kUsage;
    }
    bmmlab::ApFreeSet s = bmmlab::ap_free_set( m, bmmlab::parse_ap_free_method( method ) );
    bmmlab::RtGraph g = bmmlab::build_rt_graph( m, s );
    inst = bmmlab::build_instance( g, prob, seed );
    std::cout << "rs instance: r=" << g.r() << " t=" << g.m << " n_a=" << inst.n_a
              << " n_b=" << inst.n_b << " n_c=" << inst.n_c << " ones_p=" << inst.p.ones()
              << " ones_q=" << inst.q.ones() << "\n";
  }
  else if ( kind == "random" )
  {
    if ( n_a == 0 || n_b == 0 || n_c == 0 )
    {
      std::cerr << "gen: --n (or --na/--nb/--nc) required for --kind random\n";
      return kUsage;
    }
    inst = bmmlab::random_instance( n_a, n_b, n_c, p_density, q_density, seed );
    std::cout << "random instance: n_a=" << inst.n_a << " n_b=" << inst.n_b
              << " n_c=" << inst.n_c << " ones_p=" << inst.p.ones()
              << " ones_q=" << inst.q.ones() << "\n";
  }
  else
  {
    std::cerr << "gen: unknown kind " << kind << "\n";
    return kUsage;
  }
  if ( inst.p.ones() == 0 )
    std::cout << "warning: P is all-zero; every row is exempt\n";
  bmmlab::save_instance( inst, out );
  std::cout << "wrote " << out << "\n";
  return kOk;
}

int cmd_run( const std::string& alg_name, uint32_t t, uint32_t w, const std::string& instance_path,
             const std::string& report_path, const std::string& witness_out, bool materialize )
{
  bmmlab::TripartiteInstance inst = bmmlab::load_instance( instance_path );
  bmmlab::AlgorithmSpec spec;
  spec.alg = bmmlab::parse_algorithm( alg_name );
  spec.t = t;
  spec.w = w;

  bool want_circuit = materialize || !witness_out.empty();
  bmmlab::CostReport report;
  if ( want_circuit )
  {
    auto start = std::chrono::steady_clock::now();
    bmmlab::WitnessCircuit circuit = bmmlab::build_witness( inst, spec );
    report = bmmlab::cost_report( circuit, inst );
    report.algorithm = bmmlab::algorithm_name( spec.alg );
    report.wall_ms =
        std::chrono::duration<double, std::milli>( std::chrono::steady_clock::now() - start )
            .count();
    bmmlab::ValidationReport validation = bmmlab::validate_witness( circuit, inst );
    if ( !validation.correct )
    {
      std::cerr << "run: witness failed validation: " << validation.detail << "\n";
      return kCheckFailed;
    }
    if ( !witness_out.empty() )
    {
      if ( circuit.size() > ( 1u << 20 ) )
      {
        std::cerr << "run: circuit too large for a witness file (" << circuit.size()
                  << " gates)\n";
        return kUsage;
      }
      bmmlab::save_witness( circuit, witness_out );
      std::cout << "wrote " << witness_out << "\n";
    }
  }
  else
  {
    bmmlab::StreamingRun run = bmmlab::run_streaming( inst, spec, true );
    if ( !run.rows_valid )
    {
      std::cerr << "run: " << run.detail << "\n";
      return kCheckFailed;
    }
    report = run.report;
  }
  if ( !report_path.empty() )
    bmmlab::append_report_row( report_path, report );
  std::cout << bmmlab::CostReport::csv_header() << "\n" << report.csv_row() << "\n";
  return kOk;
}

int cmd_audit( const std::string& check, const std::string& instance_path,
               const std::string& witness_path, bmmlab::AuditParams params, uint32_t k_lo,
               uint32_t k_hi, uint32_t density_n, const std::string& out )
{
  std::optional<bmmlab::TripartiteInstance> inst;
  if ( !instance_path.empty() )
    inst = bmmlab::load_instance( instance_path );

  bmmlab::AuditReport report;
  if ( check == "density" )
    report = bmmlab::density_check_random( params.trials, density_n, params.seed );
  else if ( check == "diverse" )
  {
    if ( !inst )
    {
      std::cerr << "audit: --instance required\n";
      return kUsage;
    }
    report = bmmlab::diversity_certify( *inst, params.k, params.l, params.exhaustive,
                                        params.trials, params.seed );
  }
  else if ( check == "unhelpful" )
  {
    if ( !inst )
    {
      std::cerr << "audit: --instance required\n";
      return kUsage;
    }
    bmmlab::ColumnInterval k{ k_lo ? k_lo : 1, k_hi ? k_hi : inst->n_c };
    report = bmmlab::unhelpfulness_check( *inst, k, params.k, params.l, params.exhaustive,
                                          params.trials, params.seed );
  }
  else if ( check == "reuse" || check == "lemmas" )
  {
    if ( !inst || witness_path.empty() )
    {
      std::cerr << "audit: --instance and --witness required\n";
      return kUsage;
    }
    bmmlab::WitnessCircuit witness = bmmlab::load_witness( witness_path );
    report = check == "reuse" ? bmmlab::reuse_audit( witness, *inst, params )
                              : bmmlab::lemma_inequality_check( witness, *inst, params );
  }
  else
  {
    std::cerr << "audit: unknown check " << check << "\n";
    return kUsage;
  }

  std::string text = report.to_json().dump( 1 ) + "\n";
  if ( !out.empty() )
    bmmlab::write_text_atomic( out, text );
  std::cout << text;

  bool proved_lemma = check == "density" || check == "lemmas";
  if ( proved_lemma && !report.pass )
    return kCheckFailed;
  return kOk;
}

int cmd_bench( const std::string& spec_path )
{
  bmmlab::ExperimentSpec spec = bmmlab::load_experiment_spec( spec_path );
  auto rows = bmmlab::run_experiment( spec );
  std::cout << "wrote " << spec.out << " (" << rows.size() << " rows)\n";
  if ( spec.separation )
    std::cout << "wrote " << spec.separation_out << "\n";
  return kOk;
}

int cmd_verify( const std::string& instance_path, const std::string& witness_path )
{
  bmmlab::TripartiteInstance inst = bmmlab::load_instance( instance_path );
  bmmlab::WitnessCircuit witness = bmmlab::load_witness( witness_path );
  bmmlab::ValidationReport report = bmmlab::validate_witness( witness, inst );
  std::cout << "structured: " << ( report.structured ? "yes" : "no" ) << "\n"
            << "all_defined: " << ( report.all_defined ? "yes" : "no" ) << "\n"
            << "correct: " << ( report.correct ? "yes" : "no" ) << "\n"
            << "empty_rows: " << report.empty_rows.size() << "\n";
  if ( report.oracle_checked )
    std::cout << "oracle: " << ( report.oracle_ok ? "ok" : "mismatch" ) << "\n";
  if ( !report.missing_rows.empty() )
  {
    std::cout << "missing_rows:";
    for ( uint32_t a : report.missing_rows )
      std::cout << " " << a + 1;
    std::cout << "\n";
  }
  if ( !report.detail.empty() )
    std::cout << "detail: " << report.detail << "\n";
  return report.correct ? kOk : kCheckFailed;
}

} // namespace

int main( int argc, char** argv )
{
  CLI::App app{ "bmmlab: a laboratory for the combinatorial BMM witness cost model" };
  app.require_subcommand( 1 );

  // gen
  auto* gen = app.add_subcommand( "gen", "generate an instance file" );
  std::string gen_kind, gen_method = "greedy", gen_out;
  uint32_t gen_m = 0, gen_n = 0, gen_na = 0, gen_nb = 0, gen_nc = 0;
  double gen_prob = 0.0, gen_density = 0.5, gen_pd = -1.0, gen_qd = -1.0;
  uint64_t gen_seed = 1;
  gen->add_option( "--kind", gen_kind, "rs | random" )->required();
  gen->add_option( "--m", gen_m, "matching count for rs" );
  gen->add_option( "--s,--method", gen_method,
                   "progression-free set method: greedy | behrend" );
  gen->add_option( "--prob", gen_prob, "sparsification probability for rs" );
  gen->add_option( "--n", gen_n, "square size for random" );
  gen->add_option( "--na", gen_na, "rows of A" );
  gen->add_option( "--nb", gen_nb, "rows of B" );
  gen->add_option( "--nc", gen_nc, "columns of C" );
  gen->add_option( "--density", gen_density, "density for random (both matrices)" );
  gen->add_option( "--pdensity", gen_pd, "density of P, overrides --density" );
  gen->add_option( "--qdensity", gen_qd, "density of Q, overrides --density" );
  gen->add_option( "--seed", gen_seed, "RNG seed" );
  gen->add_option( "--out", gen_out, "output instance file" )->required();

  // run
  auto* run = app.add_subcommand( "run", "run a witness-emitting algorithm" );
  std::string run_alg, run_instance, run_report, run_witness;
  uint32_t run_t = 0, run_w = 0;
  bool run_materialize = false;
  run->add_option( "--alg", run_alg, "naive | memo | fourrussians | block" )->required();
  run->add_option( "--t", run_t, "group size over B" );
  run->add_option( "--w", run_w, "interval width over C" );
  run->add_option( "--instance", run_instance, "instance file" )->required();
  run->add_option( "--report", run_report, "CSV report to append to" );
  run->add_option( "--emit-witness", run_witness, "write the witness JSON (small circuits)" );
  run->add_flag( "--materialize", run_materialize, "force the materialized path" );

  // audit
  auto* audit = app.add_subcommand( "audit", "run a structural audit" );
  std::string audit_check, audit_instance, audit_witness, audit_out;
  bmmlab::AuditParams params;
  uint32_t audit_klo = 0, audit_khi = 0, audit_density_n = 100;
  bool audit_sampled = false;
  audit->add_option( "--check", audit_check, "density | diverse | unhelpful | reuse | lemmas" )
      ->required();
  audit->add_option( "--instance", audit_instance, "instance file" );
  audit->add_option( "--witness", audit_witness, "witness file" );
  audit->add_option( "--k", params.k, "head-count threshold k" );
  audit->add_option( "--l", params.l, "set-size threshold l" );
  audit->add_option( "--c", params.c, "diversity constant c" );
  audit->add_option( "--d", params.d, "diversity constant d" );
  audit->add_option( "--c0", params.c0, "chargeable threshold constant" );
  audit->add_option( "--c1", params.c1, "limited-reuse constant" );
  audit->add_flag( "--sampled", audit_sampled, "sampled mode instead of exhaustive" );
  audit->add_option( "--trials", params.trials, "sample count" );
  audit->add_option( "--seed", params.seed, "RNG seed for sampling" );
  audit->add_option( "--klo", audit_klo, "interval lower column (1-based)" );
  audit->add_option( "--khi", audit_khi, "interval upper column (1-based)" );
  audit->add_option( "--n", audit_density_n, "universe bound for density configs" );
  audit->add_option( "--out", audit_out, "write the report JSON here" );

  // bench
  auto* bench = app.add_subcommand( "bench", "run an experiment grid" );
  std::string bench_spec;
  bench->add_option( "--spec", bench_spec, "experiment spec JSON" )->required();

  // verify
  auto* verify = app.add_subcommand( "verify", "validate a stored witness against an instance" );
  std::string verify_instance, verify_witness;
  verify->add_option( "--instance", verify_instance, "instance file" )->required();
  verify->add_option( "--witness", verify_witness, "witness file" )->required();

  try
  {
    app.parse( argc, argv );
  }
  catch ( const CLI::ParseError& e )
  {
    int code = app.exit( e );
    return code == 0 ? kOk : kUsage;
  }

  try
  {
    if ( gen->parsed() )
    {
      uint32_t na = gen_na ? gen_na : gen_n;
      uint32_t nb = gen_nb ? gen_nb : gen_n;
      uint32_t nc = gen_nc ? gen_nc : gen_n;
      double pd = gen_pd >= 0 ? gen_pd : gen_density;
      double qd = gen_qd >= 0 ? gen_qd : gen_density;
      return cmd_gen( gen_kind, gen_m, gen_method, gen_prob, na, nb, nc, pd, qd, gen_seed,
                      gen_out );
    }
    if ( run->parsed() )
      return cmd_run( run_alg, run_t, run_w, run_instance, run_report, run_witness,
                      run_materialize );
    if ( audit->parsed() )
    {
      params.exhaustive = !audit_sampled;
      return cmd_audit( audit_check, audit_instance, audit_witness, params, audit_klo, audit_khi,
                        audit_density_n, audit_out );
    }
    if ( bench->parsed() )
      return cmd_bench( bench_spec );
    if ( verify->parsed() )
      return cmd_verify( verify_instance, verify_witness );
  }
  catch ( const std::invalid_argument& e )
  {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
  catch ( const std::exception& e )
  {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}
