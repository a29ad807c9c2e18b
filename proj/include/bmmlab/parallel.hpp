/*!
  \file parallel.hpp
  \brief Order-independent parallel loops capped by BMMLAB_THREADS.
*/

#pragma once

#include <cstdlib>
#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace bmmlab
{

inline unsigned worker_count()
{
  unsigned hw = std::thread::hardware_concurrency();
  if ( hw == 0 )
    hw = 1;
  if ( const char* env = std::getenv( "BMMLAB_THREADS" ) )
  {
    long cap = std::strtol( env, nullptr, 10 );
    if ( cap >= 1 && static_cast<unsigned>( cap ) < hw )
      hw = static_cast<unsigned>( cap );
  }
  return hw;
}

/*! Run fn(i) for i in [0, n).  fn must only touch per-index state or
    aggregate through order-independent reductions. */
template<typename Fn>
void parallel_for( std::size_t n, Fn&& fn )
{
  unsigned workers = worker_count();
  if ( workers <= 1 || n < 2 * workers )
  {
    for ( std::size_t i = 0; i < n; ++i )
      fn( i );
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve( workers );
  for ( unsigned w = 0; w < workers; ++w )
  {
    pool.emplace_back( [&, w]() {
      for ( std::size_t i = w; i < n; i += workers )
        fn( i );
    } );
  }
  for ( auto& t : pool )
    t.join();
}

} // namespace bmmlab
