/*!
  \file rng.hpp
  \brief Counter-based random streams.

  Every random decision in the library is a pure function of (seed, tags),
  so results do not depend on iteration order or thread count.
*/

#pragma once

#include <cstdint>

namespace bmmlab
{

inline uint64_t mix64( uint64_t x )
{
  x += 0x9e3779b97f4a7c15ULL;
  x = ( x ^ ( x >> 30 ) ) * 0xbf58476d1ce4e5b9ULL;
  x = ( x ^ ( x >> 27 ) ) * 0x94d049bb133111ebULL;
  return x ^ ( x >> 31 );
}

/*! Uniform 64-bit value keyed by (seed, a, b). */
inline uint64_t counter_rng( uint64_t seed, uint64_t a, uint64_t b )
{
  return mix64( mix64( mix64( seed ) ^ a ) ^ b );
}

inline uint64_t counter_rng( uint64_t seed, uint64_t a, uint64_t b, uint64_t c )
{
  return mix64( counter_rng( seed, a, b ) ^ c );
}

/*! Map a 64-bit draw to [0, 1). */
inline double uniform01( uint64_t r )
{
  return static_cast<double>( r >> 11 ) * 0x1.0p-53;
}

/*! Draw in [0, n) from a keyed value; n must be nonzero. */
inline uint64_t bounded( uint64_t r, uint64_t n )
{
  return static_cast<uint64_t>( uniform01( r ) * static_cast<double>( n ) ) % n;
}

/*! Small sequential PRNG for test data; splitmix64 stream. */
class SplitMix
{
public:
  explicit SplitMix( uint64_t seed ) : state_( seed ) {}

  uint64_t next() { return mix64( state_++ ); }
  double next01() { return uniform01( next() ); }
  uint64_t below( uint64_t n ) { return bounded( next(), n ); }

private:
  uint64_t state_;
};

} // namespace bmmlab
