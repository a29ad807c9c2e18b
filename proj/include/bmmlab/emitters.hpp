/*!
  \file emitters.hpp
  \brief Witness-emitting BMM algorithms: naive union chains, memoized
         chains, Four Russians with column partitioning, and block unions
         without partitioning.

  Every emitter is a template over the sink concept from builder.hpp and is
  deterministic: gate events depend only on the instance.
*/

#pragma once

#include "bits.hpp"
#include "builder.hpp"
#include "circuit.hpp"
#include "instance.hpp"

#include <bit>
#include <chrono>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace bmmlab
{

struct FourRussiansParams
{
  uint32_t t = 0; //!< row-group size over B; 0 = floor(log2 n_b)
  uint32_t w = 0; //!< column width over C; 0 = max(1, floor(log2 n_c) / 3)
};

enum class Algorithm
{
  naive,
  memo,
  four_russians,
  block
};

inline Algorithm parse_algorithm( const std::string& name )
{
  if ( name == "naive" )
    return Algorithm::naive;
  if ( name == "memo" )
    return Algorithm::memo;
  if ( name == "fourrussians" )
    return Algorithm::four_russians;
  if ( name == "block" )
    return Algorithm::block;
  throw std::invalid_argument( "unknown algorithm: " + name );
}

inline const char* algorithm_name( Algorithm alg )
{
  switch ( alg )
  {
  case Algorithm::naive: return "naive";
  case Algorithm::memo: return "memo";
  case Algorithm::four_russians: return "fourrussians";
  case Algorithm::block: return "block";
  }
  return "?";
}

struct AlgorithmSpec
{
  Algorithm alg = Algorithm::naive;
  uint32_t t = 0; //!< group size for fourrussians/block; 0 = default
  uint32_t w = 0; //!< interval width for fourrussians; 0 = default
};

namespace detail
{

inline uint32_t floor_log2( uint64_t n )
{
  return n <= 1 ? 0 : 63 - std::countl_zero( n );
}

inline uint32_t default_group_size( uint32_t n )
{
  return std::max<uint32_t>( 1, floor_log2( n ) );
}

inline uint32_t default_piece_width( uint32_t n_c )
{
  return std::max<uint32_t>( 1, floor_log2( n_c ) / 3 );
}

/*! Left-to-right union chain per output row. */
template<class Sink>
void emit_naive( const TripartiteInstance& inst, Sink& sink )
{
  for ( uint32_t a = 0; a < inst.n_a; ++a )
  {
    const BitVector& gamma = inst.p.row( a );
    if ( !gamma.any() )
      continue;
    typename Sink::handle acc = 0;
    bool first = true, acc_owned = false;
    gamma.for_each_set( [&]( std::size_t b ) {
      typename Sink::handle in = sink.input( static_cast<uint32_t>( b ) );
      if ( first )
      {
        acc = in;
        first = false;
      }
      else
      {
        typename Sink::handle next = sink.union_gate( acc, in );
        if ( acc_owned )
          sink.release( acc );
        acc = next;
        acc_owned = true;
      }
    } );
    sink.mark_output( acc, a );
    if ( acc_owned )
      sink.release( acc );
  }
}

/*! As naive, but a table keyed by the canonical value pair of each union
    reuses the earlier result gate.  The key is the value pair alone; on a
    hit the stored row set must also equal the accumulated set, otherwise
    reuse would break correctness of the final (Gamma(a), C, v) triple and
    the event is treated as a miss. */
template<class Sink>
void emit_memo( const TripartiteInstance& inst, Sink& sink )
{
  struct Entry
  {
    typename Sink::handle h;
    BitVector s;
  };
  std::unordered_map<std::string, Entry> memo;

  for ( uint32_t a = 0; a < inst.n_a; ++a )
  {
    const BitVector& gamma = inst.p.row( a );
    if ( !gamma.any() )
      continue;
    typename Sink::handle acc = 0;
    bool first = true, acc_owned = false;
    BitVector acc_set( inst.n_b );
    gamma.for_each_set( [&]( std::size_t b ) {
      typename Sink::handle in = sink.input( static_cast<uint32_t>( b ) );
      if ( first )
      {
        acc = in;
        acc_set.set( b );
        first = false;
        return;
      }
      std::string key_a, key_b;
      sink.append_value_key( acc, key_a );
      sink.append_value_key( in, key_b );
      std::string key = key_a <= key_b ? key_a + key_b : key_b + key_a;
      acc_set.set( b );
      auto it = memo.find( key );
      if ( it != memo.end() && it->second.s == acc_set )
      {
        if ( acc_owned )
          sink.release( acc );
        acc = it->second.h;
        acc_owned = false; // shared with the memo table
      }
      else
      {
        typename Sink::handle next = sink.union_gate( acc, in );
        if ( acc_owned )
          sink.release( acc );
        acc = next;
        if ( it == memo.end() )
        {
          memo.emplace( std::move( key ), Entry{ next, acc_set } );
          acc_owned = false; // pinned by the memo table
        }
        else
          acc_owned = true;
      }
    } );
    sink.mark_output( acc, a );
    if ( acc_owned )
      sink.release( acc );
  }
}

/*! Shared scaffolding of fourrussians/block: per column interval, build
    Gray-code subset tables per B-group and union each row's per-group
    entries.  `piece(b, k)` supplies the width-|k| piece handle of row b
    (borrowed; the caller controls its lifetime).  Each row with at least
    one nonempty group gets row_done(a, handle); the row's reference on the
    handle transfers to row_done. */
template<class Sink, class PieceFn, class RowDone>
void subset_union_pass( const TripartiteInstance& inst, Sink& sink, uint32_t t, ColumnInterval k,
                        PieceFn&& piece, RowDone&& row_done )
{
  const uint32_t n_b = inst.n_b;
  const uint32_t groups = ( n_b + t - 1 ) / t;

  // per-row running accumulators across groups; each holds one reference
  std::vector<typename Sink::handle> row_acc( inst.n_a );
  std::vector<uint8_t> row_live( inst.n_a, 0 );

  std::vector<typename Sink::handle> table;
  std::vector<uint8_t> owned;
  std::vector<typename Sink::handle> piece_of( t );

  for ( uint32_t g = 0; g < groups; ++g )
  {
    const uint32_t lo_b = g * t;
    const uint32_t width = std::min( t, n_b - lo_b );
    const uint32_t subsets = uint32_t( 1 ) << width;

    table.assign( subsets, 0 );
    owned.assign( subsets, 0 );
    for ( uint32_t i = 0; i < width; ++i )
      piece_of[i] = piece( lo_b + i, k );

    // Gray-code order; every subset of size >= 2 is one union of an already
    // built subset with a singleton piece (its highest element, which always
    // precedes the subset in the code).
    for ( uint32_t i = 1; i < subsets; ++i )
    {
      uint32_t s = i ^ ( i >> 1 );
      if ( std::popcount( s ) == 1 )
        table[s] = piece_of[std::countr_zero( s )];
      else
      {
        uint32_t hi_bit = 31 - std::countl_zero( s );
        uint32_t parent = s & ~( uint32_t( 1 ) << hi_bit );
        table[s] = sink.union_gate( table[parent], piece_of[hi_bit] );
        owned[s] = 1;
      }
    }

    for ( uint32_t a = 0; a < inst.n_a; ++a )
    {
      const BitVector& gamma = inst.p.row( a );
      uint32_t mask = 0;
      for ( uint32_t i = 0; i < width; ++i )
        if ( gamma.get( lo_b + i ) )
          mask |= uint32_t( 1 ) << i;
      if ( !mask )
        continue;
      typename Sink::handle entry = table[mask];
      if ( !row_live[a] )
      {
        sink.retain( entry );
        row_acc[a] = entry;
        row_live[a] = 1;
      }
      else
      {
        typename Sink::handle next = sink.union_gate( row_acc[a], entry );
        sink.release( row_acc[a] );
        row_acc[a] = next;
      }
    }

    for ( uint32_t s = 1; s < subsets; ++s )
      if ( owned[s] )
        sink.release( table[s] );
  }

  for ( uint32_t a = 0; a < inst.n_a; ++a )
    if ( row_live[a] )
      row_done( a, row_acc[a] );
}

/*! Four Russians: partition every input row into width-w intervals, run the
    subset-union pass per interval, and concatenate each row's interval
    pieces left to right. */
template<class Sink>
void emit_four_russians( const TripartiteInstance& inst, Sink& sink, FourRussiansParams params )
{
  const uint32_t t = params.t ? params.t : default_group_size( inst.n_b );
  const uint32_t w = params.w ? params.w : default_piece_width( inst.n_c );
  if ( t < 1 || t > inst.n_b )
    throw std::invalid_argument( "four_russians: group size t outside [1, n_b]" );
  if ( t > 24 )
    throw std::invalid_argument( "four_russians: group size t > 24 would exhaust memory" );
  if ( w < 1 || w > inst.n_c )
    throw std::invalid_argument( "four_russians: interval width w outside [1, n_c]" );

  const uint32_t intervals = ( inst.n_c + w - 1 ) / w;

  // full-row accumulators built by concatenation, left to right
  std::vector<typename Sink::handle> concat_acc( inst.n_a );
  std::vector<uint8_t> concat_live( inst.n_a, 0 );

  std::vector<typename Sink::handle> interval_pieces( inst.n_b );
  std::vector<uint8_t> piece_built( inst.n_b );
  for ( uint32_t j = 0; j < intervals; ++j )
  {
    ColumnInterval k{ j * w + 1, std::min( inst.n_c, ( j + 1 ) * w ) };
    std::fill( piece_built.begin(), piece_built.end(), 0 );
    auto piece = [&]( uint32_t b, ColumnInterval kk ) {
      if ( !piece_built[b] )
      {
        interval_pieces[b] = sink.partition( sink.input( b ), kk );
        piece_built[b] = 1;
      }
      return interval_pieces[b];
    };
    subset_union_pass( inst, sink, t, k, piece, [&]( uint32_t a, typename Sink::handle h ) {
      if ( !concat_live[a] )
      {
        concat_acc[a] = h;
        concat_live[a] = 1;
      }
      else
      {
        typename Sink::handle next = sink.concat( concat_acc[a], h );
        sink.release( concat_acc[a] );
        sink.release( h );
        concat_acc[a] = next;
      }
    } );
    for ( uint32_t b = 0; b < inst.n_b; ++b )
      if ( piece_built[b] )
        sink.release( interval_pieces[b] );
  }

  for ( uint32_t a = 0; a < inst.n_a; ++a )
    if ( concat_live[a] )
    {
      sink.mark_output( concat_acc[a], a );
      sink.release( concat_acc[a] );
    }
}

/*! Block unions: the same group-subset precomputation over the full
    interval C only; no partition gates. */
template<class Sink>
void emit_block( const TripartiteInstance& inst, Sink& sink, uint32_t t )
{
  if ( t < 1 )
    throw std::invalid_argument( "block: group size t must be at least 1" );
  t = std::min( t, inst.n_b );
  if ( t > 24 )
    throw std::invalid_argument( "block: group size t > 24 would exhaust memory" );
  auto piece = [&]( uint32_t b, ColumnInterval ) { return sink.input( b ); };
  subset_union_pass( inst, sink, t, inst.full_interval(), piece,
                     [&]( uint32_t a, typename Sink::handle h ) {
                       sink.mark_output( h, a );
                       sink.release( h );
                     } );
}

} // namespace detail

template<class Sink>
void emit_witness( const TripartiteInstance& inst, const AlgorithmSpec& spec, Sink& sink )
{
  switch ( spec.alg )
  {
  case Algorithm::naive:
    detail::emit_naive( inst, sink );
    break;
  case Algorithm::memo:
    detail::emit_memo( inst, sink );
    break;
  case Algorithm::four_russians:
    detail::emit_four_russians( inst, sink, FourRussiansParams{ spec.t, spec.w } );
    break;
  case Algorithm::block:
    detail::emit_block( inst, sink,
                        spec.t ? spec.t : detail::default_group_size( inst.n_a ) );
    break;
  }
}

inline WitnessCircuit naive_witness( const TripartiteInstance& inst )
{
  CircuitBuilder b( inst );
  detail::emit_naive( inst, b );
  return b.take();
}

inline WitnessCircuit memoized_union_witness( const TripartiteInstance& inst )
{
  CircuitBuilder b( inst );
  detail::emit_memo( inst, b );
  return b.take();
}

inline WitnessCircuit four_russians_witness( const TripartiteInstance& inst,
                                             FourRussiansParams params = {} )
{
  CircuitBuilder b( inst );
  detail::emit_four_russians( inst, b, params );
  return b.take();
}

inline WitnessCircuit block_union_witness( const TripartiteInstance& inst, uint32_t t )
{
  CircuitBuilder b( inst );
  detail::emit_block( inst, b, t );
  return b.take();
}

inline WitnessCircuit build_witness( const TripartiteInstance& inst, const AlgorithmSpec& spec )
{
  CircuitBuilder b( inst );
  emit_witness( inst, spec, b );
  return b.take();
}

/*! Streaming run: cost report plus row-value validation against the
    row-union product.  Rows with empty neighborhoods are exempt. */
struct StreamingRun
{
  CostReport report;
  bool rows_valid = true;
  std::string detail;
};

inline StreamingRun run_streaming( const TripartiteInstance& inst, const AlgorithmSpec& spec,
                                   bool validate_rows = true )
{
  auto start = std::chrono::steady_clock::now();
  StreamingMeter meter( inst, validate_rows );
  emit_witness( inst, spec, meter );
  StreamingRun run;
  run.report = meter.report();
  run.report.algorithm = algorithm_name( spec.alg );
  if ( validate_rows )
  {
    for ( uint32_t a = 0; a < inst.n_a; ++a )
    {
      const BitVector& gamma = inst.p.row( a );
      const auto& got = meter.output_rows()[a];
      if ( !gamma.any() )
      {
        if ( got )
        {
          run.rows_valid = false;
          run.detail = "output emitted for empty row " + std::to_string( a + 1 );
          break;
        }
        continue;
      }
      if ( !got || !( *got == wrow( inst.q, gamma ) ) )
      {
        run.rows_valid = false;
        run.detail = "row " + std::to_string( a + 1 ) + " disagrees with the row-union product";
        break;
      }
    }
  }
  run.report.wall_ms = std::chrono::duration<double, std::milli>(
                           std::chrono::steady_clock::now() - start )
                           .count();
  return run;
}

} // namespace bmmlab
