/*!
  \file bench.hpp
  \brief Seeded experiment grids with CSV reports and derived rate columns.

  Rates divide the model cost by the asymptotic targets:
    rate_fr      = total * log2(n)^2 / n^3
    rate_memo    = total / (n^2 * log2 n)
    rate_sqrtlog = total * 2^sqrt(log2 n) / n^3
  with n the column count n_c of the instance.
*/

#pragma once

#include "apfree.hpp"
#include "circuit.hpp"
#include "emitters.hpp"
#include "instance.hpp"
#include "rt_graph.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <filesystem>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace bmmlab
{

inline double rate_four_russians( uint64_t total, uint32_t n )
{
  double logn = std::log2( static_cast<double>( std::max<uint32_t>( 2, n ) ) );
  return static_cast<double>( total ) * logn * logn / std::pow( double( n ), 3.0 );
}

inline double rate_memo( uint64_t total, uint32_t n )
{
  double logn = std::log2( static_cast<double>( std::max<uint32_t>( 2, n ) ) );
  return static_cast<double>( total ) / ( double( n ) * n * logn );
}

inline double rate_sqrtlog( uint64_t total, uint32_t n )
{
  double logn = std::log2( static_cast<double>( std::max<uint32_t>( 2, n ) ) );
  return static_cast<double>( total ) * std::exp2( std::sqrt( logn ) ) / std::pow( double( n ), 3.0 );
}

inline std::string format_rate( double v )
{
  std::ostringstream os;
  os.precision( 6 );
  os << v;
  return os.str();
}

/*! One validated streaming run; throws when the emitted rows are wrong. */
inline CostReport measure_cost( const TripartiteInstance& inst, const AlgorithmSpec& spec )
{
  StreamingRun run = run_streaming( inst, spec, true );
  if ( !run.rows_valid )
    throw std::logic_error( "measure_cost: " + run.detail );
  return run.report;
}

struct BenchRow
{
  CostReport report;

  std::string csv_row() const
  {
    uint32_t n = report.n_c;
    return report.csv_row() + "," + format_rate( rate_four_russians( report.total(), n ) ) + "," +
           format_rate( rate_memo( report.total(), n ) ) + "," +
           format_rate( rate_sqrtlog( report.total(), n ) );
  }

  static std::string csv_header()
  {
    return CostReport::csv_header() + ",rate_fr,rate_memo,rate_sqrtlog";
  }
};

/*! RS instance on the m-grid: greedy or Behrend set on [1..m]. */
inline TripartiteInstance rs_instance( uint32_t m, ApFreeMethod method, double prob,
                                       uint64_t seed )
{
  RtGraph g = build_rt_graph( m, ap_free_set( m, method ) );
  return build_instance( g, prob, seed );
}

/*! Random instance with the dimensions and per-matrix one-densities of a
    reference instance; the standing density-matched baseline. */
inline TripartiteInstance density_matched_random( const TripartiteInstance& ref, uint64_t seed )
{
  double p_density = ref.n_a && ref.n_b
                         ? static_cast<double>( ref.p.ones() ) / ( double( ref.n_a ) * ref.n_b )
                         : 0.0;
  double q_density = ref.n_b && ref.n_c
                         ? static_cast<double>( ref.q.ones() ) / ( double( ref.n_b ) * ref.n_c )
                         : 0.0;
  return random_instance( ref.n_a, ref.n_b, ref.n_c, p_density, q_density, seed );
}

struct SeparationPoint
{
  uint32_t m = 0;
  uint32_t n_a = 0, n_b = 0, n_c = 0;
  uint32_t seeds = 0;
  double hard_mean = 0.0;
  double baseline_mean = 0.0;

  double ratio() const { return baseline_mean > 0 ? hard_mean / baseline_mean : 0.0; }

  static std::string csv_header()
  {
    return "m,n_a,n_b,n_c,seeds,hard_mean,baseline_mean,ratio";
  }

  std::string csv_row() const
  {
    std::ostringstream os;
    os.precision( 10 );
    os << m << "," << n_a << "," << n_b << "," << n_c << "," << seeds << "," << hard_mean << ","
       << baseline_mean << "," << ratio();
    return os.str();
  }
};

/*! Mean cost of `spec` on RS-sparsified instances at m versus the
    density-matched random baseline, averaged over the seed list. */
inline SeparationPoint separation_point( uint32_t m, ApFreeMethod method, double prob,
                                         const AlgorithmSpec& spec,
                                         const std::vector<uint64_t>& seeds )
{
  SeparationPoint point;
  point.m = m;
  point.seeds = static_cast<uint32_t>( seeds.size() );
  double hard = 0.0, base = 0.0;
  for ( uint64_t seed : seeds )
  {
    TripartiteInstance rs = rs_instance( m, method, prob, seed );
    point.n_a = rs.n_a;
    point.n_b = rs.n_b;
    point.n_c = rs.n_c;
    hard += static_cast<double>( measure_cost( rs, spec ).total() );
    TripartiteInstance baseline = density_matched_random( rs, seed ^ 0x9e3779b97f4a7c15ULL );
    base += static_cast<double>( measure_cost( baseline, spec ).total() );
  }
  point.hard_mean = hard / seeds.size();
  point.baseline_mean = base / seeds.size();
  return point;
}

// ---------------------------------------------------------------------------
// experiment specs
// ---------------------------------------------------------------------------

struct ExperimentSpec
{
  std::string out = "bench.csv";
  std::vector<uint64_t> seeds{ 1 };
  std::vector<AlgorithmSpec> algorithms;

  std::vector<uint32_t> random_n;  //!< square random instances
  double random_density = 0.5;

  std::vector<uint32_t> rs_m;      //!< RS instances on the m grid
  ApFreeMethod rs_method = ApFreeMethod::greedy;
  double rs_prob = 0.5;

  bool separation = false;         //!< paired hard/baseline ratio rows
  std::string separation_out = "separation.csv";
  std::string separation_algorithm = "memo";
  std::vector<uint32_t> separation_m;
  std::vector<uint64_t> separation_seeds;

  static ExperimentSpec from_json( const nlohmann::json& j )
  {
    ExperimentSpec spec;
    if ( j.contains( "out" ) )
      spec.out = j.at( "out" ).get<std::string>();
    if ( j.contains( "seeds" ) )
      spec.seeds = j.at( "seeds" ).get<std::vector<uint64_t>>();
    if ( j.contains( "algorithms" ) )
      for ( const auto& ja : j.at( "algorithms" ) )
      {
        AlgorithmSpec a;
        a.alg = parse_algorithm( ja.at( "name" ).get<std::string>() );
        if ( ja.contains( "t" ) )
          a.t = ja.at( "t" ).get<uint32_t>();
        if ( ja.contains( "w" ) )
          a.w = ja.at( "w" ).get<uint32_t>();
        spec.algorithms.push_back( a );
      }
    if ( j.contains( "random" ) )
    {
      spec.random_n = j.at( "random" ).at( "n" ).get<std::vector<uint32_t>>();
      if ( j.at( "random" ).contains( "density" ) )
        spec.random_density = j.at( "random" ).at( "density" ).get<double>();
    }
    if ( j.contains( "rs" ) )
    {
      spec.rs_m = j.at( "rs" ).at( "m" ).get<std::vector<uint32_t>>();
      if ( j.at( "rs" ).contains( "method" ) )
        spec.rs_method = parse_ap_free_method( j.at( "rs" ).at( "method" ).get<std::string>() );
      if ( j.at( "rs" ).contains( "prob" ) )
        spec.rs_prob = j.at( "rs" ).at( "prob" ).get<double>();
    }
    if ( j.contains( "separation" ) )
    {
      const auto& js = j.at( "separation" );
      spec.separation = true;
      if ( js.contains( "out" ) )
        spec.separation_out = js.at( "out" ).get<std::string>();
      if ( js.contains( "algorithm" ) )
        spec.separation_algorithm = js.at( "algorithm" ).get<std::string>();
      spec.separation_m = js.at( "m" ).get<std::vector<uint32_t>>();
      if ( js.contains( "seeds" ) )
        spec.separation_seeds = js.at( "seeds" ).get<std::vector<uint64_t>>();
    }
    return spec;
  }
};

inline ExperimentSpec load_experiment_spec( const std::string& path )
{
  std::ifstream in( path );
  if ( !in )
    throw std::runtime_error( "cannot open experiment spec " + path );
  nlohmann::json j;
  in >> j;
  return ExperimentSpec::from_json( j );
}

/*! Runs the grid and writes the CSV(s); returns the bench rows. */
inline std::vector<BenchRow> run_experiment( const ExperimentSpec& spec )
{
  std::vector<BenchRow> rows;
  for ( const AlgorithmSpec& alg : spec.algorithms )
  {
    for ( uint32_t n : spec.random_n )
      for ( uint64_t seed : spec.seeds )
      {
        TripartiteInstance inst =
            random_instance( n, n, n, spec.random_density, spec.random_density, seed );
        CostReport rep = measure_cost( inst, alg );
        rows.push_back( BenchRow{ rep } );
      }
    for ( uint32_t m : spec.rs_m )
      for ( uint64_t seed : spec.seeds )
      {
        TripartiteInstance inst = rs_instance( m, spec.rs_method, spec.rs_prob, seed );
        CostReport rep = measure_cost( inst, alg );
        rows.push_back( BenchRow{ rep } );
      }
  }
  std::string text = BenchRow::csv_header() + "\n";
  for ( const BenchRow& row : rows )
    text += row.csv_row() + "\n";
  write_text_atomic( spec.out, text );

  if ( spec.separation )
  {
    AlgorithmSpec alg;
    alg.alg = parse_algorithm( spec.separation_algorithm );
    std::vector<uint64_t> seeds =
        spec.separation_seeds.empty() ? spec.seeds : spec.separation_seeds;
    std::string sep = SeparationPoint::csv_header() + "\n";
    for ( uint32_t m : spec.separation_m )
      sep += separation_point( m, spec.rs_method, spec.rs_prob, alg, seeds ).csv_row() + "\n";
    write_text_atomic( spec.separation_out, sep );
  }
  return rows;
}

/*! Appends one cost row to a CSV report, creating it with a header. */
inline void append_report_row( const std::string& path, const CostReport& report )
{
  bool fresh = !std::filesystem::exists( path );
  std::ofstream out( path, std::ios::app );
  if ( !out )
    throw std::runtime_error( "cannot open report file " + path );
  if ( fresh )
    out << CostReport::csv_header() << "\n";
  out << report.csv_row() << "\n";
}

} // namespace bmmlab
