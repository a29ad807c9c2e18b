/*!
  \file audit.hpp
  \brief Empirical checks of the structural graph properties and counting
         lemmas on concrete instances and witnesses.

  Thresholds use base-2 logarithms; ceilings apply to gate-level thresholds
  like c0*log n.  At desk scale the constants dominate, so every report
  carries the raw measured quantity next to the bound instead of a bare
  verdict.
*/

#pragma once

#include "bits.hpp"
#include "circuit.hpp"
#include "emitters.hpp"
#include "instance.hpp"
#include "trim.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace bmmlab
{

struct AuditParams
{
  uint32_t k = 2;        //!< diversity/unhelpfulness head count
  uint32_t l = 2;        //!< diversity/unhelpfulness set size
  uint32_t c = 5;        //!< diversity constant (c log n, d log n)
  uint32_t d = 5;        //!< diversity constant
  uint32_t c0 = 20;      //!< chargeable threshold constant
  uint32_t c1 = 7;       //!< limited-reuse constant
  bool exhaustive = true;
  uint64_t trials = 10000;
  uint64_t seed = 1;
};

struct AuditReport
{
  std::string check;
  bool pass = true;
  bool applicable = true;
  nlohmann::json measured = nlohmann::json::object();
  nlohmann::json bound = nlohmann::json::object();
  std::optional<nlohmann::json> counterexample;
  std::string note;

  nlohmann::json to_json() const
  {
    nlohmann::json j;
    j["check"] = check;
    j["pass"] = pass;
    j["applicable"] = applicable;
    j["measured"] = measured;
    j["bound"] = bound;
    if ( counterexample )
      j["counterexample"] = *counterexample;
    if ( !note.empty() )
      j["note"] = note;
    return j;
  }
};

namespace detail
{

inline uint32_t ceil_log2( uint64_t n )
{
  uint32_t b = 0;
  while ( ( uint64_t( 1 ) << b ) < n )
    ++b;
  return b;
}

inline uint32_t gamma_mask24( const BitVector& row )
{
  uint32_t mask = 0;
  row.for_each_set( [&]( std::size_t b ) { mask |= uint32_t( 1 ) << b; } );
  return mask;
}

/*! Next subset of the same popcount (Gosper); 0 when exhausted. */
inline uint32_t next_combination( uint32_t mask, uint32_t universe_bits )
{
  uint32_t c = mask & ( ~mask + 1 );
  uint32_t r = mask + c;
  uint32_t next = ( ( ( r ^ mask ) >> 2 ) / c ) | r;
  return next < ( uint32_t( 1 ) << universe_bits ) ? next : 0;
}

/*! Deterministic size-`size` subset of [0, n) for (seed, trial); Floyd. */
inline std::vector<uint32_t> sample_subset( uint64_t seed, uint64_t trial, uint32_t n,
                                            uint32_t size )
{
  std::vector<uint32_t> out;
  std::vector<bool> in( n, false );
  for ( uint32_t j = n - size; j < n; ++j )
  {
    uint32_t x = static_cast<uint32_t>( bounded( counter_rng( seed, trial, j ), j + 1 ) );
    if ( in[x] )
      x = j;
    in[x] = true;
    out.push_back( x );
  }
  std::sort( out.begin(), out.end() );
  return out;
}

} // namespace detail

// ---------------------------------------------------------------------------
// diversity
// ---------------------------------------------------------------------------

/*! (k,l)-diversity of the sparsified adjacency: no l-sized B-set has k or
    more fully connected A-vertices.  Exhaustive enumeration is limited to
    n_b <= 24; otherwise a pairwise certificate (every pair of rows shares
    fewer than l neighbors) certifies the property for every k >= 2, with
    sampling as the fallback. */
inline AuditReport diversity_certify( const TripartiteInstance& inst, uint32_t k, uint32_t l,
                                      bool exhaustive, uint64_t trials = 10000,
                                      uint64_t seed = 1 )
{
  if ( k < 1 || l < 1 )
    throw std::invalid_argument( "diversity_certify: thresholds must be >= 1" );
  AuditReport report;
  report.check = "diversity";
  report.bound["k"] = k;
  report.bound["l"] = l;

  if ( l > inst.n_b )
  {
    report.pass = true;
    report.note = "vacuous: l exceeds n_b, no candidate set exists";
    return report;
  }

  if ( exhaustive )
  {
    if ( inst.n_b > 24 )
      throw std::invalid_argument( "diversity_certify: exhaustive mode limited to n_b <= 24" );
    std::vector<uint32_t> rows( inst.n_a );
    for ( uint32_t a = 0; a < inst.n_a; ++a )
      rows[a] = detail::gamma_mask24( inst.p.row( a ) );
    uint32_t best = 0, best_mask = 0;
    for ( uint32_t mask = ( uint32_t( 1 ) << l ) - 1; mask;
          mask = detail::next_combination( mask, inst.n_b ) )
    {
      uint32_t count = 0;
      for ( uint32_t a = 0; a < inst.n_a; ++a )
        count += ( mask & ~rows[a] ) == 0;
      if ( count > best )
      {
        best = count;
        best_mask = mask;
      }
    }
    report.measured["max_fully_connected"] = best;
    report.measured["mode"] = "exhaustive";
    report.pass = best < k;
    if ( !report.pass )
    {
      std::vector<uint32_t> s;
      for ( uint32_t b = 0; b < inst.n_b; ++b )
        if ( best_mask & ( uint32_t( 1 ) << b ) )
          s.push_back( b + 1 );
      report.counterexample = nlohmann::json{ { "s", s }, { "fully_connected", best } };
    }
    return report;
  }

  // pairwise certificate, sufficient for any k >= 2
  uint32_t worst_common = 0;
  uint32_t worst_a = 0, worst_a2 = 0;
  for ( uint32_t a = 0; a < inst.n_a; ++a )
    for ( uint32_t a2 = a + 1; a2 < inst.n_a; ++a2 )
    {
      uint32_t common =
          static_cast<uint32_t>( ( inst.p.row( a ) & inst.p.row( a2 ) ).popcount() );
      if ( common > worst_common )
      {
        worst_common = common;
        worst_a = a;
        worst_a2 = a2;
      }
    }
  report.measured["max_pairwise_common"] = worst_common;
  if ( k >= 2 && worst_common < l )
  {
    report.pass = true;
    report.measured["mode"] = "pairwise-certificate";
    report.note = "certified for every k >= 2: no pair shares l common neighbors";
    return report;
  }
  if ( k == 2 && worst_common >= l )
  {
    report.pass = false;
    report.measured["mode"] = "pairwise-certificate";
    BitVector common = inst.p.row( worst_a ) & inst.p.row( worst_a2 );
    std::vector<uint32_t> s;
    common.for_each_set( [&]( std::size_t b ) {
      if ( s.size() < l )
        s.push_back( static_cast<uint32_t>( b ) + 1 );
    } );
    report.counterexample = nlohmann::json{
        { "s", s }, { "a", std::vector<uint32_t>{ worst_a + 1, worst_a2 + 1 } } };
    return report;
  }

  // sampled fallback
  uint32_t best = 0;
  std::vector<uint32_t> best_s;
  for ( uint64_t trial = 0; trial < trials; ++trial )
  {
    auto subset = detail::sample_subset( seed, trial, inst.n_b, l );
    uint32_t count = 0;
    for ( uint32_t a = 0; a < inst.n_a; ++a )
    {
      bool all = true;
      for ( uint32_t b : subset )
        if ( !inst.p.get( a, b ) )
        {
          all = false;
          break;
        }
      count += all;
    }
    if ( count > best )
    {
      best = count;
      best_s = subset;
    }
  }
  report.measured["max_fully_connected"] = best;
  report.measured["mode"] = "sampled";
  report.measured["trials"] = trials;
  report.pass = best < k;
  report.note = "sampled check, not a certificate";
  if ( !report.pass )
  {
    for ( auto& b : best_s )
      ++b;
    report.counterexample = nlohmann::json{ { "s", best_s }, { "fully_connected", best } };
  }
  return report;
}

// ---------------------------------------------------------------------------
// unhelpfulness
// ---------------------------------------------------------------------------

namespace detail
{

/*! Per-vertex state for the forced-set helpfulness test on K.  Unique
    columns sharing a mirror b form one fiber: a candidate S' containing b
    lights all of the fiber's columns, so the union value must treat a
    fiber atomically and mirrors are counted once. */
struct HelpfulnessContext
{
  struct Fiber
  {
    BitVector cols; //!< slice mask over K
    bool alive;     //!< the (a, mirror) edge survives sparsification
  };
  struct PerVertex
  {
    BitVector single_alive; //!< singleton fibers with surviving mirror
    BitVector single_dead;  //!< singleton fibers with dead mirror
    std::vector<Fiber> multi;
  };
  std::vector<PerVertex> vertex;
};

inline HelpfulnessContext helpfulness_context( const TripartiteInstance& inst, ColumnInterval k )
{
  HelpfulnessContext ctx;
  ctx.vertex.reserve( inst.n_a );
  for ( uint32_t a = 0; a < inst.n_a; ++a )
  {
    UniqueStructure us = unique_structure( inst, a );
    std::map<int32_t, std::vector<uint32_t>> fibers; // mirror -> slice positions
    us.unique_cols.for_each_set( [&]( std::size_t c ) {
      if ( c + 1 >= k.lo && c + 1 <= k.hi )
        fibers[us.beta[c]].push_back( static_cast<uint32_t>( c + 1 - k.lo ) );
    } );
    HelpfulnessContext::PerVertex pv;
    pv.single_alive = BitVector( k.width() );
    pv.single_dead = BitVector( k.width() );
    for ( const auto& [mirror, positions] : fibers )
    {
      bool alive = inst.p.get( a, static_cast<uint32_t>( mirror ) );
      if ( positions.size() == 1 )
        ( alive ? pv.single_alive : pv.single_dead ).set( positions[0] );
      else
      {
        HelpfulnessContext::Fiber f;
        f.cols = BitVector( k.width() );
        for ( uint32_t pos : positions )
          f.cols.set( pos );
        f.alive = alive;
        pv.multi.push_back( std::move( f ) );
      }
    }
    ctx.vertex.push_back( std::move( pv ) );
  }
  return ctx;
}

/*! S is helpful for a iff the value wrow(Q_S)|_K, read on a's unique
    columns, pins a consistent mirror set S' that fully survives
    sparsification and has |S'| >= |S|. */
inline bool helpful_for( const HelpfulnessContext& ctx, uint32_t a, const BitVector& u_slice,
                         std::size_t s_size )
{
  const auto& pv = ctx.vertex[a];
  if ( u_slice.intersects( pv.single_dead ) )
    return false;
  std::size_t mirrors = ( u_slice & pv.single_alive ).popcount();
  for ( const auto& fiber : pv.multi )
  {
    BitVector hit = u_slice & fiber.cols;
    if ( !hit.any() )
      continue;
    if ( !( hit == fiber.cols ) || !fiber.alive )
      return false;
    ++mirrors;
  }
  return mirrors >= s_size;
}

} // namespace detail

/*! (k,l)-unhelpfulness of the instance on K: every B-set of size >= l is
    helpful for at most k vertices of A.  Exhaustive over all subsets for
    n_b <= 20, sampled otherwise.  Requires origin data. */
inline AuditReport unhelpfulness_check( const TripartiteInstance& inst, ColumnInterval k_interval,
                                        uint32_t k, uint32_t l, bool exhaustive,
                                        uint64_t trials = 10000, uint64_t seed = 1 )
{
  if ( !inst.has_origin() )
    throw std::invalid_argument( "unhelpfulness_check: origin data required" );
  if ( !k_interval.valid_in( inst.n_c ) )
    throw std::invalid_argument( "unhelpfulness_check: interval out of range" );
  if ( k < 1 || l < 1 )
    throw std::invalid_argument( "unhelpfulness_check: thresholds must be >= 1" );

  AuditReport report;
  report.check = "unhelpful";
  report.bound["k"] = k;
  report.bound["l"] = l;
  report.measured["k_lo"] = k_interval.lo;
  report.measured["k_hi"] = k_interval.hi;

  if ( l > inst.n_b )
  {
    report.note = "vacuous: l exceeds n_b, no candidate set exists";
    return report;
  }

  detail::HelpfulnessContext ctx = detail::helpfulness_context( inst, k_interval );

  auto helped_count = [&]( const std::vector<uint32_t>& subset ) {
    BitVector u( inst.n_c );
    for ( uint32_t b : subset )
      u |= inst.q.row( b );
    BitVector u_slice = restrict_to( u, k_interval );
    uint32_t count = 0;
    for ( uint32_t a = 0; a < inst.n_a; ++a )
      count += detail::helpful_for( ctx, a, u_slice, subset.size() );
    return count;
  };

  uint32_t worst = 0;
  std::vector<uint32_t> worst_s;
  if ( exhaustive )
  {
    if ( inst.n_b > 20 )
      throw std::invalid_argument( "unhelpfulness_check: exhaustive mode limited to n_b <= 20" );
    for ( uint32_t mask = 1; mask < ( uint32_t( 1 ) << inst.n_b ); ++mask )
    {
      if ( static_cast<uint32_t>( std::popcount( mask ) ) < l )
        continue;
      std::vector<uint32_t> subset;
      for ( uint32_t b = 0; b < inst.n_b; ++b )
        if ( mask & ( uint32_t( 1 ) << b ) )
          subset.push_back( b );
      uint32_t count = helped_count( subset );
      if ( count > worst )
      {
        worst = count;
        worst_s = subset;
      }
    }
    report.measured["mode"] = "exhaustive";
  }
  else
  {
    for ( uint64_t trial = 0; trial < trials; ++trial )
    {
      uint32_t size = l + static_cast<uint32_t>(
                              bounded( counter_rng( seed, 7777, trial ), inst.n_b - l + 1 ) );
      auto subset = detail::sample_subset( seed, trial, inst.n_b, size );
      uint32_t count = helped_count( subset );
      if ( count > worst )
      {
        worst = count;
        worst_s = subset;
      }
    }
    report.measured["mode"] = "sampled";
    report.measured["trials"] = trials;
    report.note = "sampled check, not a certificate";
  }
  report.measured["max_helped"] = worst;
  report.pass = worst <= k;
  if ( !report.pass )
  {
    for ( auto& b : worst_s )
      ++b;
    report.counterexample = nlohmann::json{ { "s", worst_s }, { "helped", worst } };
  }
  return report;
}

// ---------------------------------------------------------------------------
// density lemma
// ---------------------------------------------------------------------------

/*! Given distinct elements u_i inside intervals K_i over [1..n], at least
    r/2 intervals must satisfy |K_i n U| >= |K_i| r / 4n.  Proved lemma: a
    failure is an implementation bug. */
inline AuditReport density_check( const std::vector<ColumnInterval>& intervals,
                                  const std::vector<uint32_t>& elements, uint32_t n )
{
  if ( intervals.size() != elements.size() )
    throw std::invalid_argument( "density_check: intervals and elements must pair up" );
  std::vector<uint32_t> sorted = elements;
  std::sort( sorted.begin(), sorted.end() );
  if ( std::adjacent_find( sorted.begin(), sorted.end() ) != sorted.end() )
    throw std::invalid_argument( "density_check: elements must be distinct" );
  for ( std::size_t i = 0; i < intervals.size(); ++i )
  {
    if ( !intervals[i].valid_in( n ) )
      throw std::invalid_argument( "density_check: interval out of range" );
    if ( elements[i] < intervals[i].lo || elements[i] > intervals[i].hi )
      throw std::invalid_argument( "density_check: element outside its interval" );
  }

  const uint64_t r = elements.size();
  BitVector u( n );
  for ( uint32_t e : elements )
    u.set( e - 1 );

  uint64_t qualifying = 0;
  for ( const auto& k : intervals )
  {
    uint64_t inter = restrict_to( u, k ).popcount();
    // |K n U| >= |K| r / 4n, exact integer comparison
    if ( 4 * uint64_t( n ) * inter >= uint64_t( k.width() ) * r )
      ++qualifying;
  }

  AuditReport report;
  report.check = "density";
  report.measured["qualifying"] = qualifying;
  report.measured["r"] = r;
  report.bound["required"] = static_cast<double>( r ) / 2.0;
  report.pass = 2 * qualifying >= r;
  if ( !report.pass )
  {
    nlohmann::json ce;
    ce["elements"] = elements;
    nlohmann::json ks = nlohmann::json::array();
    for ( const auto& k : intervals )
      ks.push_back( { k.lo, k.hi } );
    ce["intervals"] = ks;
    report.counterexample = ce;
  }
  return report;
}

/*! Runs density_check on `trials` random valid configurations over
    universes up to max_n.  Permanent regression property: the lemma is
    proved, so a single failure fails the report. */
inline AuditReport density_check_random( uint64_t trials, uint32_t max_n, uint64_t seed )
{
  if ( max_n < 2 )
    throw std::invalid_argument( "density_check_random: max_n too small" );
  AuditReport report;
  report.check = "density";
  report.measured["trials"] = trials;
  report.measured["max_n"] = max_n;
  for ( uint64_t trial = 0; trial < trials; ++trial )
  {
    uint32_t n =
        2 + static_cast<uint32_t>( bounded( counter_rng( seed, trial, 0 ), max_n - 1 ) );
    uint32_t r = 1 + static_cast<uint32_t>( bounded( counter_rng( seed, trial, 1 ), n ) );
    auto elems0 = detail::sample_subset( seed ^ 0xabcdefULL, trial, n, r );
    std::vector<uint32_t> elements;
    std::vector<ColumnInterval> intervals;
    for ( uint32_t i = 0; i < r; ++i )
    {
      uint32_t u = elems0[i] + 1;
      uint32_t lo = 1 + static_cast<uint32_t>( bounded( counter_rng( seed, trial, 100 + i ), u ) );
      uint32_t hi =
          u + static_cast<uint32_t>( bounded( counter_rng( seed, trial, 200 + i ), n - u + 1 ) );
      elements.push_back( u );
      intervals.push_back( ColumnInterval{ lo, hi } );
    }
    AuditReport one = density_check( intervals, elements, n );
    if ( !one.pass )
    {
      report.pass = false;
      report.counterexample = one.counterexample;
      report.measured["failed_trial"] = trial;
      return report;
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// limited-reuse audit
// ---------------------------------------------------------------------------

/*! Builds a pairwise independent family of (a, K) pairs (per a, a greedy
    maximal disjoint subfamily of its covering intervals), extracts and
    trims each induced union witness, collects chargeable gates at threshold
    c0 * ceil(log2 n_c), and groups them by the row-class of their output
    value.  The reported ratio chargeable/classes is what the limited-reuse
    lemma bounds by c1 log n on average. */
inline AuditReport reuse_audit( const WitnessCircuit& w, const TripartiteInstance& inst,
                                const AuditParams& params )
{
  if ( !inst.has_origin() )
    throw std::invalid_argument( "reuse_audit: origin data required" );
  ValidationReport validation = validate_witness( w, inst, false );
  if ( !validation.correct )
    throw std::invalid_argument( "reuse_audit: witness is not correct" );

  EvalResult eval = eval_circuit( w, inst );
  const uint32_t n = inst.n_c;
  const uint64_t threshold = uint64_t( params.c0 ) * detail::ceil_log2( n );

  uint64_t pairs = 0, chargeable_total = 0;
  std::map<std::string, uint64_t> histogram;

  for ( uint32_t a = 0; a < inst.n_a; ++a )
  {
    auto intervals = covering_intervals( w, eval, inst, a );
    if ( intervals.empty() )
      continue;
    // earliest-end greedy gives a maximal disjoint subfamily
    std::sort( intervals.begin(), intervals.end(), []( ColumnInterval x, ColumnInterval y ) {
      return x.hi != y.hi ? x.hi < y.hi : x.lo < y.lo;
    } );
    uint32_t last_hi = 0;
    UniqueStructure us = unique_structure( inst, a );
    for ( const auto& k : intervals )
    {
      if ( k.lo <= last_hi )
        continue;
      last_hi = k.hi;
      ++pairs;
      auto induced = induced_union_witness( w, eval, inst, a, k );
      if ( !induced )
        continue;
      TrimAnnotation trim = trim_circuit( *induced );
      BitVector bp = beta_prime( inst, us, k );
      ChargeableReport ch = chargeable_gates( *induced, trim, bp, threshold );
      chargeable_total += ch.gates.size();
      for ( uint32_t node : ch.gates )
      {
        uint32_t orig = static_cast<uint32_t>( induced->nodes[node].orig_gate );
        const Gate& g = w.gates[orig];
        std::string key = RowClassLedger::class_key( eval.values[g.left].v,
                                                     eval.values[g.right].v, eval.values[orig].v );
        ++histogram[key];
      }
    }
  }

  AuditReport report;
  report.check = "reuse";
  report.measured["independent_pairs"] = pairs;
  report.measured["chargeable_gates"] = chargeable_total;
  report.measured["distinct_classes"] = histogram.size();
  report.measured["threshold"] = threshold;
  uint64_t max_bucket = 0;
  for ( const auto& [key, count] : histogram )
    max_bucket = std::max( max_bucket, count );
  report.measured["max_class_sharing"] = max_bucket;
  double bound = params.c1 * std::log2( static_cast<double>( std::max<uint32_t>( 2, n ) ) );
  report.bound["c1_log_n"] = bound;
  if ( histogram.empty() )
  {
    report.applicable = false;
    report.note = "no chargeable gates at this threshold";
    return report;
  }
  double ratio = static_cast<double>( chargeable_total ) / static_cast<double>( histogram.size() );
  report.measured["ratio"] = ratio;
  report.pass = ratio <= bound;
  report.note = "probabilistic bound over emitted witnesses, not adversarial circuits";
  return report;
}

// ---------------------------------------------------------------------------
// lemma inequality checks
// ---------------------------------------------------------------------------

namespace detail
{

/*! Distinct-class floor for union-only witnesses:
    classes >= m/2kl - n/k with m = sum |beta'(C)|, n = n_a. */
inline void union_only_lemma( const WitnessCircuit& w, const TripartiteInstance& inst,
                              const EvalResult& eval, uint32_t k, uint32_t l,
                              AuditReport& report )
{
  uint64_t m = 0;
  for ( uint32_t a = 0; a < inst.n_a; ++a )
  {
    UniqueStructure us = unique_structure( inst, a );
    m += beta_prime( inst, us, inst.full_interval() ).popcount();
  }
  RowClassLedger ledger;
  for ( uint32_t id = 0; id < w.gates.size(); ++id )
    if ( w.gates[id].kind == GateKind::union_gate )
      ledger.insert( eval.values[w.gates[id].left].v, eval.values[w.gates[id].right].v,
                     eval.values[id].v );
  double bound =
      static_cast<double>( m ) / ( 2.0 * k * l ) - static_cast<double>( inst.n_a ) / k;
  report.measured["m"] = m;
  report.measured["distinct_classes"] = ledger.distinct();
  report.bound["class_floor"] = bound;
  if ( bound <= 0 )
    report.note += "union-only bound nonpositive (vacuous); ";
  if ( static_cast<double>( ledger.distinct() ) < bound )
    report.pass = false;
}

/*! Partition version, applied per interval used by the witness: with
    l_part = c0 ceil(log2 n) and R the rows with at least r ones inside K,
    gates of >= m_K/4k*l_part distinct classes of cost >= r must exist among
    the union gates of K.  Intervals where the bound is vacuous need no
    certification. */
inline void partition_lemma( const WitnessCircuit& w, const TripartiteInstance& inst,
                             const EvalResult& eval, const AuditParams& params,
                             AuditReport& report )
{
  const uint32_t l_part = params.c0 * ceil_log2( inst.n_c );
  std::map<std::pair<uint32_t, uint32_t>, std::vector<uint32_t>> by_interval;
  for ( uint32_t id = 0; id < w.gates.size(); ++id )
    if ( w.gates[id].kind == GateKind::union_gate )
      by_interval[{ eval.values[id].k.lo, eval.values[id].k.hi }].push_back( id );

  std::vector<UniqueStructure> uniq;
  uniq.reserve( inst.n_a );
  for ( uint32_t a = 0; a < inst.n_a; ++a )
    uniq.push_back( unique_structure( inst, a ) );

  nlohmann::json per_k = nlohmann::json::array();
  bool any_applicable = false;
  for ( const auto& [key, gate_ids] : by_interval )
  {
    ColumnInterval k{ key.first, key.second };
    // r: smallest nonzero restricted row weight, making R maximal
    uint64_t r = 0;
    BitVector in_r( inst.n_b );
    for ( uint32_t b = 0; b < inst.n_b; ++b )
    {
      uint64_t ones = restrict_to( inst.q.row( b ), k ).popcount();
      if ( ones > 0 && ( r == 0 || ones < r ) )
        r = ones;
    }
    if ( r == 0 )
      continue;
    for ( uint32_t b = 0; b < inst.n_b; ++b )
      if ( restrict_to( inst.q.row( b ), k ).popcount() >= r )
        in_r.set( b );

    uint64_t m_k = 0;
    for ( uint32_t a = 0; a < inst.n_a; ++a )
    {
      uint64_t size = ( beta_prime( inst, uniq[a], k ) & in_r ).popcount();
      if ( size >= 2 * uint64_t( l_part ) )
        m_k += size;
    }
    double bound = static_cast<double>( m_k ) / ( 4.0 * params.k * l_part );
    if ( m_k == 0 )
      continue; // vacuous for this interval
    any_applicable = true;

    // the lemma presumes (k, l_part)-unhelpfulness on K
    AuditReport cert = unhelpfulness_check( inst, k, params.k, l_part, true );
    if ( !cert.pass )
      throw std::invalid_argument( "lemma_inequality_check: (k,l) not certified on interval" );

    RowClassLedger ledger;
    for ( uint32_t id : gate_ids )
    {
      const Gate& g = w.gates[id];
      uint64_t cost = std::min( { eval.values[g.left].v.popcount(),
                                  eval.values[g.right].v.popcount(),
                                  eval.values[id].v.popcount() } );
      if ( cost >= r )
        ledger.insert( eval.values[g.left].v, eval.values[g.right].v, eval.values[id].v );
    }
    nlohmann::json row;
    row["k_lo"] = k.lo;
    row["k_hi"] = k.hi;
    row["r"] = r;
    row["m_k"] = m_k;
    row["classes_ge_r"] = ledger.distinct();
    row["bound"] = bound;
    per_k.push_back( row );
    if ( static_cast<double>( ledger.distinct() ) < bound )
      report.pass = false;
  }
  report.measured["partition_intervals"] = per_k;
  if ( !any_applicable )
    report.note += "partition bound vacuous on every interval; ";
}

/*! Many-partitions bound: with L = {a : l_a >= l and deg(a) >= r}, a
    (c log n, d log n)-diverse instance forces
    |W| >= r l |L| / (2 c d log^2 n). */
inline void many_partitions_lemma( const WitnessCircuit& w, const TripartiteInstance& inst,
                                   const EvalResult& eval, const AuditParams& params,
                                   AuditReport& report )
{
  std::vector<uint32_t> interval_counts( inst.n_a, 0 );
  for ( uint32_t a = 0; a < inst.n_a; ++a )
    interval_counts[a] =
        static_cast<uint32_t>( covering_intervals( w, eval, inst, a ).size() );

  uint64_t r = 0;
  std::vector<uint32_t> members;
  for ( uint32_t a = 0; a < inst.n_a; ++a )
    if ( interval_counts[a] >= params.l )
    {
      uint64_t deg = inst.p.row( a ).popcount();
      members.push_back( a );
      r = r == 0 ? deg : std::min( r, deg );
    }
  report.measured["many_partitions_L"] = members.size();
  if ( members.empty() )
  {
    report.note += "many-partitions bound not applicable (L empty); ";
    return;
  }

  const double logn = std::log2( static_cast<double>( std::max<uint32_t>( 2, inst.n_c ) ) );
  const uint32_t k_div = static_cast<uint32_t>( std::ceil( params.c * logn ) );
  const uint32_t l_div = static_cast<uint32_t>( std::ceil( params.d * logn ) );
  AuditReport cert = diversity_certify( inst, k_div, l_div, false );
  bool certified = cert.pass && ( !cert.measured.contains( "mode" ) ||
                                  cert.measured["mode"] == "pairwise-certificate" );
  if ( !certified )
    throw std::invalid_argument(
        "lemma_inequality_check: diversity not certified for the many-partitions bound" );

  double bound = static_cast<double>( r ) * params.l * members.size() /
                 ( 2.0 * params.c * params.d * logn * logn );
  report.measured["many_partitions_r"] = r;
  report.measured["gate_count"] = w.gates.size();
  report.bound["many_partitions_size"] = bound;
  if ( static_cast<double>( w.gates.size() ) < bound )
    report.pass = false;
}

} // namespace detail

/*! Counting-lemma audit of a correct witness.  Union-only witnesses get the
    distinct-class floor m/2kl - n/k (certified (k,l)-unhelpfulness on C
    required); witnesses with partitions get the per-interval partition
    bound and the many-partitions size bound.  These are proved lemmas:
    a failing applicable inequality indicates a bug. */
inline AuditReport lemma_inequality_check( const WitnessCircuit& w,
                                           const TripartiteInstance& inst,
                                           const AuditParams& params )
{
  if ( !inst.has_origin() )
    throw std::invalid_argument( "lemma_inequality_check: origin data required" );
  ValidationReport validation = validate_witness( w, inst, false );
  if ( !validation.correct )
    throw std::invalid_argument( "lemma_inequality_check: witness is not correct" );

  AuditReport report;
  report.check = "lemmas";
  report.bound["k"] = params.k;
  report.bound["l"] = params.l;
  EvalResult eval = eval_circuit( w, inst );

  bool union_only = true;
  for ( const Gate& g : w.gates )
    if ( g.kind == GateKind::partition || g.kind == GateKind::concat )
    {
      union_only = false;
      break;
    }
  report.measured["union_only"] = union_only;

  if ( union_only )
  {
    AuditReport cert =
        unhelpfulness_check( inst, inst.full_interval(), params.k, params.l, true );
    if ( !cert.pass )
      throw std::invalid_argument(
          "lemma_inequality_check: (k,l)-unhelpfulness on C not certified" );
    detail::union_only_lemma( w, inst, eval, params.k, params.l, report );
  }
  else
  {
    detail::partition_lemma( w, inst, eval, params, report );
    detail::many_partitions_lemma( w, inst, eval, params, report );
  }
  return report;
}

} // namespace bmmlab
