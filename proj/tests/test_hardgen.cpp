#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <bmmlab/apfree.hpp>
#include <bmmlab/instance.hpp>
#include <bmmlab/rng.hpp>
#include <bmmlab/rt_graph.hpp>

#include <algorithm>
#include <cmath>
#include <set>

using namespace bmmlab;

namespace
{

// brute force over all triples, the slow second opinion for is_ap_free
bool ap_free_by_triples( const std::vector<uint32_t>& elems )
{
  for ( std::size_t i = 0; i < elems.size(); ++i )
    for ( std::size_t j = i + 1; j < elems.size(); ++j )
      for ( std::size_t k = j + 1; k < elems.size(); ++k )
        if ( elems[i] + elems[k] == 2 * elems[j] )
          return false;
  return true;
}

// exhaustive common-neighbor count in the unsparsified graph
uint32_t common_neighbors( const TripartiteInstance& inst, uint32_t a, uint32_t c )
{
  BooleanMatrix p_full = inst.unsparsified_p();
  uint32_t count = 0;
  for ( uint32_t b = 0; b < inst.n_b; ++b )
    if ( p_full.get( a, b ) && inst.q.get( b, c ) )
      ++count;
  return count;
}

} // namespace

TEST_CASE( "is_ap_free matches the triple brute force" )
{
  CHECK_FALSE( is_ap_free( { 1, 2, 3 } ) );
  CHECK( is_ap_free( {} ) );
  CHECK( is_ap_free( { 7 } ) );
  CHECK( is_ap_free( { 1, 2, 4, 5 } ) );

  SplitMix rng( 21 );
  for ( int iter = 0; iter < 300; ++iter )
  {
    std::set<uint32_t> s;
    uint32_t limit = 4 + rng.below( 40 );
    uint32_t size = rng.below( std::min<uint32_t>( 10, limit ) );
    while ( s.size() < size )
      s.insert( 1 + rng.below( limit ) );
    std::vector<uint32_t> elems( s.begin(), s.end() );
    REQUIRE( is_ap_free( elems ) == ap_free_by_triples( elems ) );
  }
}

TEST_CASE( "greedy progression-free set on [1..9]" )
{
  ApFreeSet s = ap_free_set( 9, ApFreeMethod::greedy );
  CHECK( s.elements == std::vector<uint32_t>{ 1, 2, 4, 5 } );
  CHECK( is_ap_free( s.elements ) );
}

TEST_CASE( "behrend sets are progression-free and nonempty" )
{
  for ( uint32_t m : { 1u, 2u, 10u, 100u, 1000u, 10000u } )
  {
    ApFreeSet s = ap_free_set( m, ApFreeMethod::behrend );
    CHECK( !s.elements.empty() );
    CHECK( is_ap_free( s.elements ) );
    CHECK( s.elements.back() <= m );
    CHECK( s.elements.front() >= 1 );
  }
  // the digit construction only wins asymptotically; at this scale a
  // moderate sphere layer is all it yields
  CHECK( ap_free_set( 10000, ApFreeMethod::behrend ).size() >= 20 );
}

TEST_CASE( "build_rt_graph realizes the m=3, S={1,2} example" )
{
  ApFreeSet s;
  s.limit = 3;
  s.elements = { 1, 2 };
  s.method = "greedy";
  RtGraph g = build_rt_graph( 3, s );
  CHECK( g.left_size == 5 );
  CHECK( g.right_size == 7 );
  REQUIRE( g.matchings.size() == 3 );
  CHECK( g.matchings[0] == std::vector<RtEdge>{ { 2, 3 }, { 3, 5 } } );
  CHECK( g.matchings[1] == std::vector<RtEdge>{ { 3, 4 }, { 4, 6 } } );
  CHECK( g.matchings[2] == std::vector<RtEdge>{ { 4, 5 }, { 5, 7 } } );
  CHECK_FALSE( verify_induced_matchings( g ).has_value() );
}

TEST_CASE( "single-edge matchings are trivially induced" )
{
  ApFreeSet s;
  s.limit = 1;
  s.elements = { 1 };
  s.method = "greedy";
  RtGraph g = build_rt_graph( 1, s );
  REQUIRE( g.matchings.size() == 1 );
  CHECK( g.matchings[0] == std::vector<RtEdge>{ { 2, 3 } } );
}

TEST_CASE( "verifier reports an injected cross edge" )
{
  ApFreeSet s;
  s.limit = 3;
  s.elements = { 1, 2 };
  s.method = "greedy";
  RtGraph g = build_rt_graph( 3, s );
  // edge (2,5) crosses M_1 = {(2,3),(3,5)} without belonging to it
  g.matchings[1].insert( g.matchings[1].begin(), RtEdge{ 2, 5 } );
  auto violation = verify_induced_matchings( g );
  REQUIRE( violation.has_value() );
  CHECK( violation->kind == MatchingViolation::Kind::induced_breach );
  CHECK( violation->matching == 1 );
  CHECK( violation->edge == RtEdge{ 2, 5 } );
}

TEST_CASE( "verifier reports duplicated edges across matchings" )
{
  ApFreeSet s;
  s.limit = 3;
  s.elements = { 1, 2 };
  s.method = "greedy";
  RtGraph g = build_rt_graph( 3, s );
  g.matchings[2].push_back( g.matchings[0][0] );
  std::sort( g.matchings[2].begin(), g.matchings[2].end() );
  auto violation = verify_induced_matchings( g );
  REQUIRE( violation.has_value() );
  CHECK( violation->kind == MatchingViolation::Kind::duplicate_edge );
}

TEST_CASE( "rt graphs verify induced over a range of m" )
{
  for ( uint32_t m : { 2u, 5u, 17u, 60u, 120u } )
  {
    RtGraph g = build_rt_graph( m, ap_free_set( m, ApFreeMethod::greedy ) );
    CHECK_FALSE( verify_induced_matchings( g ).has_value() );
  }
}

TEST_CASE( "build_instance wires P and Q from the matchings" )
{
  ApFreeSet s;
  s.limit = 3;
  s.elements = { 1, 2 };
  s.method = "greedy";
  RtGraph g = build_rt_graph( 3, s );
  TripartiteInstance inst = build_instance( g, 0.0, 1 );
  CHECK( inst.n_a == 5 );
  CHECK( inst.n_b == 3 );
  CHECK( inst.n_c == 7 );
  // degrees of a_1..a_5: 0,1,2,2,1
  CHECK( inst.p.row( 0 ).popcount() == 0 );
  CHECK( inst.p.row( 1 ).popcount() == 1 );
  CHECK( inst.p.row( 2 ).popcount() == 2 );
  CHECK( inst.p.row( 3 ).popcount() == 2 );
  CHECK( inst.p.row( 4 ).popcount() == 1 );
  // Q row of b_1 has ones exactly at c_3 and c_5
  CHECK( inst.q.row( 0 ) == BitVector::from_bits( "0010100" ) );

  // unique-path property: every matched pair has exactly one common neighbor
  uint32_t matched_pairs = 0;
  for ( const auto& t : inst.origin )
  {
    CHECK( common_neighbors( inst, t.a - 1, t.c - 1 ) == 1 );
    ++matched_pairs;
  }
  CHECK( matched_pairs == 6 );
}

TEST_CASE( "sparsification is a per-entry counter stream" )
{
  ApFreeSet s = ap_free_set( 40, ApFreeMethod::greedy );
  RtGraph g = build_rt_graph( 40, s );

  TripartiteInstance zero = build_instance( g, 0.0, 9 );
  TripartiteInstance full = build_instance( g, 1.0, 9 );
  CHECK( zero.p.ones() == zero.unsparsified_p().ones() );
  CHECK( full.p.ones() == 0 );
  CHECK( full.q == zero.q ); // Q is never touched

  TripartiteInstance a = build_instance( g, 0.5, 123 );
  TripartiteInstance b = build_instance( g, 0.5, 123 );
  CHECK( a.p == b.p ); // same seed, identical sparsification
  TripartiteInstance c = build_instance( g, 0.5, 124 );
  CHECK( a.p.ones() != c.p.ones() ); // overwhelmingly likely for this size

  // surviving ones concentrate around half; 5 sigma over 100 seeds
  const double total = static_cast<double>( zero.p.ones() );
  for ( uint64_t seed = 0; seed < 100; ++seed )
  {
    TripartiteInstance inst = build_instance( g, 0.5, seed );
    double sigma = std::sqrt( total * 0.25 );
    CHECK( std::abs( static_cast<double>( inst.p.ones() ) - total / 2 ) <= 5.0 * sigma );
  }
}

TEST_CASE( "unique_structure on the example instance" )
{
  ApFreeSet s;
  s.limit = 3;
  s.elements = { 1, 2 };
  s.method = "greedy";
  TripartiteInstance inst = build_instance( build_rt_graph( 3, s ), 0.0, 1 );

  UniqueStructure us = unique_structure( inst, 2 ); // a_3
  CHECK( us.unique_cols.ones() == std::vector<uint32_t>{ 2, 3, 4, 5 } ); // c_3..c_6
  CHECK( us.beta[4] == 0 );                                              // beta(c_5) = b_1
  // beta' over an interval missing all unique columns is empty
  CHECK( beta_prime( inst, us, ColumnInterval{ 1, 2 } ).popcount() == 0 );
  // over the full interval every mirror survives at prob 0
  CHECK( beta_prime( inst, us, inst.full_interval() ).popcount() == 2 );
}

TEST_CASE( "matched columns have pairwise distinct mirrors" )
{
  // On matched pairs the mirror map is injective, so |beta_a(S)| = |S[a]|
  // there.  Accidentally unique columns (one common neighbor without a
  // matched pair) can share a mirror; beta_prime is a set either way.
  TripartiteInstance inst = build_instance(
      build_rt_graph( 30, ap_free_set( 30, ApFreeMethod::greedy ) ), 0.5, 77 );
  std::map<uint32_t, std::set<uint32_t>> matched_mirrors; // a -> set of b
  std::map<uint32_t, uint32_t> matched_count;
  for ( const auto& t : inst.origin )
  {
    matched_mirrors[t.a].insert( t.b );
    ++matched_count[t.a];
  }
  for ( const auto& [a, mirrors] : matched_mirrors )
    CHECK( mirrors.size() == matched_count[a] );

  // every matched column is unique and its beta agrees with the origin
  for ( const auto& t : inst.origin )
  {
    UniqueStructure us = unique_structure( inst, t.a - 1 );
    REQUIRE( us.unique_cols.get( t.c - 1 ) );
    CHECK( us.beta[t.c - 1] == static_cast<int32_t>( t.b - 1 ) );
  }
}

TEST_CASE( "unique_structure rejects instances without origin data" )
{
  TripartiteInstance inst = random_instance( 4, 4, 4, 0.5, 0.5, 1 );
  CHECK_THROWS_AS( unique_structure( inst, 0 ), std::invalid_argument );
}

TEST_CASE( "instance JSON round-trips" )
{
  TripartiteInstance inst = build_instance(
      build_rt_graph( 12, ap_free_set( 12, ApFreeMethod::greedy ) ), 0.5, 5 );
  nlohmann::json j = instance_to_json( inst );
  TripartiteInstance back = instance_from_json( j );
  CHECK( back.p == inst.p );
  CHECK( back.q == inst.q );
  CHECK( back.origin == inst.origin );
  CHECK( back.sparsify_prob == inst.sparsify_prob );
  CHECK( back.seed == inst.seed );
  CHECK( back.source.kind == "rs" );
  CHECK( back.source.s == inst.source.s );

  TripartiteInstance rnd = random_instance( 6, 5, 9, 0.4, 0.6, 3 );
  TripartiteInstance rnd_back = instance_from_json( instance_to_json( rnd ) );
  CHECK( rnd_back.p == rnd.p );
  CHECK( rnd_back.q == rnd.q );
  CHECK_FALSE( rnd_back.has_origin() );
}

TEST_CASE( "random_instance is reproducible and density-sensitive" )
{
  TripartiteInstance a = random_instance( 32, 32, 32, 0.5, 0.5, 7 );
  TripartiteInstance b = random_instance( 32, 32, 32, 0.5, 0.5, 7 );
  CHECK( a.p == b.p );
  CHECK( a.q == b.q );
  CHECK( random_instance( 32, 32, 32, 0.0, 0.0, 7 ).p.ones() == 0 );
  CHECK( random_instance( 32, 32, 32, 1.0, 1.0, 7 ).p.ones() == 32 * 32 );
}
