/*!
  \file apfree.hpp
  \brief Progression-free subsets of [1..m].

  Two generators: a greedy scan (small, deterministic, dense enough at desk
  scale) and a Behrend-style digit construction (better density for large m).
  Both outputs are re-checked by the brute-force oracle before use.
*/

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

namespace bmmlab
{

/*! True iff no three elements x < y < z satisfy x + z = 2y.  Brute force
    over all pairs of equal parity, checking midpoint membership. */
inline bool is_ap_free( const std::vector<uint32_t>& elements )
{
  std::unordered_set<uint32_t> members( elements.begin(), elements.end() );
  for ( std::size_t i = 0; i < elements.size(); ++i )
    for ( std::size_t j = i + 1; j < elements.size(); ++j )
    {
      uint32_t x = elements[i], z = elements[j];
      if ( ( x + z ) % 2 != 0 )
        continue;
      uint32_t y = ( x + z ) / 2;
      if ( y != x && y != z && members.count( y ) )
        return false;
    }
  return true;
}

struct ApFreeSet
{
  uint32_t limit = 0;                 //!< universe bound m
  std::vector<uint32_t> elements;     //!< sorted, distinct, within [1..m]
  std::string method;                 //!< "greedy" | "behrend"

  uint32_t max_element() const { return elements.empty() ? 0 : elements.back(); }
  uint32_t size() const { return static_cast<uint32_t>( elements.size() ); }
};

namespace detail
{

inline std::vector<uint32_t> greedy_ap_free( uint32_t limit )
{
  std::vector<uint32_t> out;
  std::unordered_set<uint32_t> members;
  for ( uint32_t e = 1; e <= limit; ++e )
  {
    bool ok = true;
    // Scanning upward, e can only be the maximum of a new progression:
    // reject when some x in the set has its midpoint (x+e)/2 in the set too.
    for ( uint32_t x : out )
    {
      if ( ( x + e ) % 2 == 0 && members.count( ( x + e ) / 2 ) )
      {
        ok = false;
        break;
      }
    }
    if ( ok )
    {
      out.push_back( e );
      members.insert( e );
    }
  }
  return out;
}

/* Digits base (2d+1) with d = floor(m^(1/k)), k = ceil(sqrt(log2 m)); keep
   the sphere layer (fixed sum of squared digits) with the most elements in
   range.  No digit carries can occur when adding two such numbers, so an
   arithmetic progression inside one layer would force equal digit vectors. */
inline std::vector<uint32_t> behrend_ap_free( uint32_t limit )
{
  if ( limit <= 4 )
    return greedy_ap_free( limit );
  double log2m = std::log2( static_cast<double>( limit ) );
  uint32_t k = std::max<uint32_t>( 1, static_cast<uint32_t>( std::ceil( std::sqrt( log2m ) ) ) );
  uint32_t d = std::max<uint32_t>( 1, static_cast<uint32_t>( std::floor(
                   std::pow( static_cast<double>( limit ), 1.0 / k ) ) ) );
  uint64_t base = 2 * static_cast<uint64_t>( d ) + 1;

  std::map<uint64_t, std::vector<uint32_t>> layers; // radius^2 -> elements
  std::vector<uint32_t> digit( k, 0 );
  while ( true )
  {
    uint64_t value = 0, norm = 0;
    for ( uint32_t i = 0; i < k; ++i )
    {
      value = value * base + digit[i];
      norm += static_cast<uint64_t>( digit[i] ) * digit[i];
    }
    if ( value + 1 <= limit )
      layers[norm].push_back( static_cast<uint32_t>( value + 1 ) );
    // next digit vector over [0..d]^k
    uint32_t pos = 0;
    while ( pos < k && digit[pos] == d )
      digit[pos++] = 0;
    if ( pos == k )
      break;
    ++digit[pos];
  }

  std::vector<uint32_t> best;
  for ( auto& [norm, elems] : layers )
    if ( elems.size() > best.size() )
      best = elems;
  std::sort( best.begin(), best.end() );
  return best;
}

} // namespace detail

enum class ApFreeMethod
{
  greedy,
  behrend
};

inline ApFreeSet ap_free_set( uint32_t limit, ApFreeMethod method )
{
  if ( limit < 1 )
    throw std::invalid_argument( "ap_free_set: limit must be at least 1" );
  ApFreeSet s;
  s.limit = limit;
  if ( method == ApFreeMethod::greedy )
  {
    s.method = "greedy";
    s.elements = detail::greedy_ap_free( limit );
  }
  else
  {
    s.method = "behrend";
    s.elements = detail::behrend_ap_free( limit );
  }
  if ( !is_ap_free( s.elements ) )
    throw std::logic_error( "ap_free_set: generator produced a progression" );
  return s;
}

inline ApFreeMethod parse_ap_free_method( const std::string& name )
{
  if ( name == "greedy" )
    return ApFreeMethod::greedy;
  if ( name == "behrend" )
    return ApFreeMethod::behrend;
  throw std::invalid_argument( "unknown progression-free set method: " + name );
}

} // namespace bmmlab
