/*!
  \file rt_graph.hpp
  \brief Bipartite (r,t)-graphs built from progression-free sets.

  The realization: for x in [1..m] the matching M_x is
  {(x+s, x+2s) : s in S}.  A cross edge (x+s, x+2s') inside M_x's vertex set
  would force 2s'-s into S, an arithmetic progression, so progression-freedom
  of S makes every matching induced.
*/

#pragma once

#include "apfree.hpp"
#include "parallel.hpp"
#include "rng.hpp"

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace bmmlab
{

struct RtEdge
{
  uint32_t u = 0; //!< left vertex, 1-based
  uint32_t v = 0; //!< right vertex, 1-based

  friend bool operator==( const RtEdge&, const RtEdge& ) = default;
  friend bool operator<( const RtEdge& a, const RtEdge& b )
  {
    return a.u != b.u ? a.u < b.u : a.v < b.v;
  }
};

struct RtGraph
{
  uint32_t m = 0;          //!< matching count t
  ApFreeSet s;             //!< matching size r = |s|
  uint32_t left_size = 0;  //!< left part indexed 1..m + max S
  uint32_t right_size = 0; //!< right part indexed 1..m + 2 max S
  std::vector<std::vector<RtEdge>> matchings; //!< matchings[x-1] = M_x, sorted

  uint32_t r() const { return s.size(); }
};

struct MatchingViolation
{
  enum class Kind
  {
    duplicate_edge,  //!< two matchings share an edge
    induced_breach,  //!< a graph edge crosses a matching without belonging to it
  };
  Kind kind;
  uint32_t matching = 0; //!< 1-based matching index
  RtEdge edge;

  std::string describe() const
  {
    std::string what = kind == Kind::duplicate_edge ? "duplicate edge" : "induced-matching breach";
    return what + " in M_" + std::to_string( matching ) + " at (" + std::to_string( edge.u ) +
           "," + std::to_string( edge.v ) + ")";
  }
};

namespace detail
{

/*! Flat sorted adjacency over all matchings.  A small bitmap over the edge
    deltas v - u (built from the stored edges, so it stays sound on
    corrupted graphs) rejects almost every non-edge probe without touching
    the big neighbor array: progression-freedom makes cross deltas
    2s' - s land outside the set. */
struct RtAdjacency
{
  std::vector<uint32_t> offsets;   // per left vertex
  std::vector<uint32_t> neighbors; // right vertices, sorted per left vertex
  std::vector<uint64_t> delta_seen;
  int64_t delta_base = 0;

  explicit RtAdjacency( const RtGraph& g )
  {
    delta_base = -static_cast<int64_t>( g.left_size );
    delta_seen.assign( ( g.left_size + g.right_size ) / 64 + 2, 0 );
    std::vector<std::vector<uint32_t>> adj( g.left_size + 1 );
    for ( const auto& matching : g.matchings )
      for ( const auto& e : matching )
      {
        adj[e.u].push_back( e.v );
        uint64_t slot = static_cast<uint64_t>( int64_t( e.v ) - int64_t( e.u ) - delta_base );
        delta_seen[slot >> 6] |= uint64_t( 1 ) << ( slot & 63 );
      }
    offsets.assign( g.left_size + 2, 0 );
    for ( uint32_t u = 1; u <= g.left_size; ++u )
    {
      std::sort( adj[u].begin(), adj[u].end() );
      offsets[u + 1] = offsets[u] + static_cast<uint32_t>( adj[u].size() );
    }
    neighbors.reserve( offsets[g.left_size + 1] );
    for ( uint32_t u = 1; u <= g.left_size; ++u )
      neighbors.insert( neighbors.end(), adj[u].begin(), adj[u].end() );
  }

  bool has_edge( uint32_t u, uint32_t v ) const
  {
    uint64_t slot = static_cast<uint64_t>( int64_t( v ) - int64_t( u ) - delta_base );
    if ( !( delta_seen[slot >> 6] & ( uint64_t( 1 ) << ( slot & 63 ) ) ) )
      return false;
    auto first = neighbors.begin() + offsets[u];
    auto last = neighbors.begin() + offsets[u + 1];
    return std::binary_search( first, last, v );
  }
};

} // namespace detail

/*! Checks pairwise edge-disjointness and that every graph edge with both
    endpoints in a matching's vertex set belongs to that matching.
    Exhaustive for right_size <= 2000; above that each matching is probed
    with 1e5 random candidate cross edges drawn from a counter-based stream
    of `probe_seed`. */
inline std::optional<MatchingViolation> verify_induced_matchings( const RtGraph& g,
                                                                  uint64_t probe_seed = 0 )
{
  // disjointness
  {
    std::vector<std::pair<RtEdge, uint32_t>> all;
    for ( uint32_t x = 1; x <= g.m; ++x )
      for ( const auto& e : g.matchings[x - 1] )
        all.emplace_back( e, x );
    std::sort( all.begin(), all.end(), []( const auto& a, const auto& b ) {
      return a.first < b.first || ( a.first == b.first && a.second < b.second );
    } );
    for ( std::size_t i = 1; i < all.size(); ++i )
      if ( all[i].first == all[i - 1].first )
        return MatchingViolation{ MatchingViolation::Kind::duplicate_edge, all[i].second,
                                  all[i].first };
  }

  detail::RtAdjacency adj( g );
  const bool exhaustive = g.right_size <= 2000;
  constexpr uint64_t probes_per_matching = 100000;

  std::atomic<bool> found{ false };
  std::vector<std::optional<MatchingViolation>> hits( g.m );

  parallel_for( g.m, [&]( std::size_t xi ) {
    if ( found.load( std::memory_order_relaxed ) )
      return;
    uint32_t x = static_cast<uint32_t>( xi ) + 1;
    const auto& matching = g.matchings[xi];
    std::vector<uint32_t> lefts, rights;
    lefts.reserve( matching.size() );
    rights.reserve( matching.size() );
    for ( const auto& e : matching )
    {
      lefts.push_back( e.u );
      rights.push_back( e.v );
    }
    auto in_matching = [&]( uint32_t u, uint32_t v ) {
      return std::binary_search( matching.begin(), matching.end(), RtEdge{ u, v } );
    };
    auto probe = [&]( uint32_t u, uint32_t v ) -> bool {
      if ( adj.has_edge( u, v ) && !in_matching( u, v ) )
      {
        hits[xi] = MatchingViolation{ MatchingViolation::Kind::induced_breach, x, RtEdge{ u, v } };
        found.store( true, std::memory_order_relaxed );
        return true;
      }
      return false;
    };
    if ( exhaustive )
    {
      for ( uint32_t u : lefts )
        for ( uint32_t v : rights )
          if ( probe( u, v ) )
            return;
    }
    else
    {
      for ( uint64_t i = 0; i < probes_per_matching && !matching.empty(); ++i )
      {
        uint64_t r = counter_rng( probe_seed, x, i );
        uint32_t u = lefts[( r >> 32 ) % lefts.size()];
        uint32_t v = rights[( r & 0xffffffffu ) % rights.size()];
        if ( probe( u, v ) )
          return;
      }
    }
  } );

  // deterministic report: lowest matching index wins
  for ( const auto& hit : hits )
    if ( hit )
      return hit;
  return std::nullopt;
}

/*! Builds the (r,t)-graph for (m, s); every matching is verified induced
    before return.  A verification failure indicates a progression in s and
    is unreachable when the preconditions hold. */
inline RtGraph build_rt_graph( uint32_t m, ApFreeSet s )
{
  if ( m < 1 )
    throw std::invalid_argument( "build_rt_graph: m must be at least 1" );
  if ( s.elements.empty() )
    throw std::invalid_argument( "build_rt_graph: progression-free set is empty" );
  if ( s.limit > m )
    throw std::invalid_argument( "build_rt_graph: requires s.limit <= m" );

  RtGraph g;
  g.m = m;
  g.left_size = m + s.max_element();
  g.right_size = m + 2 * s.max_element();
  g.matchings.resize( m );
  for ( uint32_t x = 1; x <= m; ++x )
  {
    auto& matching = g.matchings[x - 1];
    matching.reserve( s.elements.size() );
    for ( uint32_t e : s.elements )
      matching.push_back( RtEdge{ x + e, x + 2 * e } );
    std::sort( matching.begin(), matching.end() );
  }
  g.s = std::move( s );

  if ( auto violation = verify_induced_matchings( g ) )
    throw std::logic_error( "build_rt_graph: " + violation->describe() );
  return g;
}

} // namespace bmmlab
