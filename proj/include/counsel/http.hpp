#ifndef COUNSEL_HTTP_HPP
#define COUNSEL_HTTP_HPP

// cpp-httplib with a listen backlog large enough for bursts of concurrent
// clients. Include this instead of <httplib.h>.

#ifndef CPPHTTPLIB_LISTEN_BACKLOG
#define CPPHTTPLIB_LISTEN_BACKLOG 512
#endif

#include <httplib.h>

#endif
